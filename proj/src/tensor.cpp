#include "wgain/tensor.hpp"

#include "wgain/errors.hpp"

namespace wgain {

ImageTensor::ImageTensor(Tensor t) : t_(std::move(t)) {
  if (t_.channels() != 3) throw ContractError("an image tensor has exactly three channels");
}

}  // namespace wgain
