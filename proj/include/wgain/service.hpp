#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wgain/model.hpp"

namespace httplib {
class Server;
}

namespace wgain {

inline constexpr const char* kRleContentType = "application/x-wgain-rle";

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_payload_bytes = 16u << 20;
  /// Center-crop and resize inputs of another size instead of rejecting them.
  bool allow_resize = false;
  double sigma = 0.1;
};

struct InpaintRequest {
  std::string image;  // encoded PNG/JPEG bytes
  std::string mask;   // PNG, or RLE text when mask_content_type is kRleContentType
  std::string mask_content_type = "image/png";
  std::optional<std::uint64_t> seed;
  bool grid = false;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type;
  std::string body;
  std::map<std::string, std::string> headers;
};

/// HTTP front for one immutable model. Handlers are reentrant; the only
/// mutable state is a set of atomic counters.
class InferenceService {
 public:
  InferenceService(Model model, std::string checkpoint_hash, ServiceOptions options = {});
  ~InferenceService();
  InferenceService(const InferenceService&) = delete;
  InferenceService& operator=(const InferenceService&) = delete;

  ServiceResponse health() const;
  ServiceResponse meta() const;
  ServiceResponse inpaint(const InpaintRequest& request) const;

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen();
  /// Binds without serving; returns the port, or -1.
  int bind();
  /// Serves on a socket bound by bind(); blocks.
  bool serve_bound();
  void stop();
  void wait_until_ready() const;

  std::uint64_t requests() const { return requests_.load(); }
  const ServiceOptions& options() const { return options_; }

 private:
  void install_routes();

  const Model model_;
  const std::string hash_;
  const ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::atomic<std::uint64_t> inpaints_{0};
  mutable std::atomic<std::uint64_t> failures_{0};
};

ServiceResponse error_response(int status, const std::string& code, const std::string& message);

}  // namespace wgain
