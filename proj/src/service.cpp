#include "wgain/service.hpp"

#include <chrono>
#include <cstdio>
#include <random>

#include <httplib.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

#include "wgain/errors.hpp"
#include "wgain/image_io.hpp"
#include "wgain/mask.hpp"

namespace wgain {

namespace {

std::span<const std::uint8_t> bytes_of(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_string_body(const std::vector<std::uint8_t>& v) { return {v.begin(), v.end()}; }

cv::Mat to_bgr(const ImageTensor& img, const MaskMatrix* hole) {
  cv::Mat out(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      bool gray = hole && !hole->valid(y * img.width() + x);
      auto& px = out.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        double v = gray ? 0.5 : std::clamp(img(c, y, x), 0.0, 1.0);
        px[2 - c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  return out;
}

/// original | damaged | inpainted, separated by white columns.
std::string triptych_png(const ImageTensor& x, const MaskMatrix& m, const ImageTensor& out) {
  cv::Mat gap(x.height(), 4, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::Mat row;
  cv::hconcat(std::vector<cv::Mat>{to_bgr(x, nullptr), gap, to_bgr(x, &m), gap, to_bgr(out, nullptr)}, row);
  std::vector<std::uint8_t> buf;
  cv::imencode(".png", row, buf);
  return to_string_body(buf);
}

ServiceResponse json_response(const nlohmann::json& j) {
  return {200, "application/json", j.dump(), {}};
}

}  // namespace

ServiceResponse error_response(int status, const std::string& code, const std::string& message) {
  return {status, "application/json", nlohmann::json{{"code", code}, {"message", message}}.dump(), {}};
}

InferenceService::InferenceService(Model model, std::string checkpoint_hash, ServiceOptions options)
    : model_(std::move(model)), hash_(std::move(checkpoint_hash)), options_(std::move(options)) {}

InferenceService::~InferenceService() { stop(); }

ServiceResponse InferenceService::health() const {
  ++requests_;
  return json_response({{"status", "ok"},
                        {"checkpoint", hash_},
                        {"input_side", model_.input_side()},
                        {"requests", requests_.load()},
                        {"inpaints", inpaints_.load()},
                        {"failures", failures_.load()}});
}

ServiceResponse InferenceService::meta() const {
  ++requests_;
  const int side = model_.input_side();
  nlohmann::json presets = nlohmann::json::array();
  for (const auto& s : eval_scenarios(side)) {
    nlohmann::json p = {{"label", s.label()}, {"kind", std::string(to_string(s.kind))}};
    if (s.kind == ScenarioKind::noise) p["p"] = s.noise_p;
    if (s.kind == ScenarioKind::center_square) p["side"] = s.side;
    if (s.kind == ScenarioKind::multi_square) {
      p["side"] = s.side;
      p["count"] = s.count;
    }
    presets.push_back(p);
  }
  return json_response({{"input_side", side},
                        {"presets", presets},
                        {"mask", {{"png", "single channel, 0 = missing, 255 = valid"}, {"rle_content_type", kRleContentType}}},
                        {"max_payload_bytes", options_.max_payload_bytes},
                        {"allow_resize", options_.allow_resize}});
}

ServiceResponse InferenceService::inpaint(const InpaintRequest& req) const {
  ++requests_;
  const auto t0 = std::chrono::steady_clock::now();
  const int side = model_.input_side();
  try {
    if (req.image.size() + req.mask.size() > options_.max_payload_bytes) {
      ++failures_;
      return error_response(413, "payload_too_large", "request exceeds the configured payload limit");
    }
    Raster raw;
    MaskMatrix m;
    try {
      raw = decode_raster(bytes_of(req.image));
    } catch (const std::exception& e) {
      ++failures_;
      return error_response(400, "undecodable_image", e.what());
    }
    try {
      m = req.mask_content_type == kRleContentType ? decode_rle(req.mask) : decode_mask(bytes_of(req.mask));
    } catch (const std::exception& e) {
      ++failures_;
      return error_response(400, "undecodable_mask", e.what());
    }
    if (raw.height != m.height() || raw.width != m.width()) {
      ++failures_;
      return error_response(422, "size_mismatch",
                            "image is " + std::to_string(raw.width) + "x" + std::to_string(raw.height) + " but mask is " +
                                std::to_string(m.width()) + "x" + std::to_string(m.height()));
    }
    ImageTensor x;
    if (raw.height == side && raw.width == side) {
      x = raster_to_image(raw);
    } else if (options_.allow_resize) {
      x = preprocess_image(raw, side);
      m = resize_mask(m, side);
    } else {
      ++failures_;
      return error_response(422, "size_mismatch",
                            "image must be " + std::to_string(side) + "x" + std::to_string(side) +
                                " (start the service with --allow-resize to resize server-side)");
    }

    const std::uint64_t seed = req.seed ? *req.seed : (std::uint64_t(std::random_device{}()) << 32) ^ std::random_device{}();
    Rng noise = Rng::stream(seed, "noise");
    ImageTensor out = wgain::inpaint(model_, x, m, options_.sigma, noise);
    ++inpaints_;

    ServiceResponse res;
    res.content_type = "image/png";
    res.body = req.grid ? triptych_png(x, m, out) : to_string_body(encode_png(out));
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    res.headers["X-Inference-Time-Ms"] = buf;
    res.headers["X-Seed"] = std::to_string(seed);
    return res;
  } catch (const ValidationError& e) {
    ++failures_;
    return error_response(422, "invalid_input", e.what());
  } catch (const std::exception& e) {
    ++failures_;
    spdlog::error("inpaint failed: {}", e.what());
    return error_response(500, "internal_error", e.what());
  }
}

void InferenceService::install_routes() {
  server_ = std::make_unique<httplib::Server>();
  auto& s = *server_;
  s.set_payload_max_length(options_.max_payload_bytes);

  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, r.content_type);
  };

  s.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  s.Get("/meta", [this, send](const httplib::Request&, httplib::Response& res) { send(res, meta()); });
  s.Post("/inpaint", [this, send](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data()) {
      ++requests_;
      ++failures_;
      return send(res, error_response(400, "bad_request", "expected multipart/form-data"));
    }
    if (!req.has_file("image") || !req.has_file("mask")) {
      ++requests_;
      ++failures_;
      return send(res, error_response(400, "bad_request", "multipart fields 'image' and 'mask' are required"));
    }
    InpaintRequest in;
    in.image = req.get_file_value("image").content;
    const auto mask = req.get_file_value("mask");
    in.mask = mask.content;
    if (!mask.content_type.empty()) in.mask_content_type = mask.content_type;
    std::string seed_text;
    if (req.has_file("seed")) seed_text = req.get_file_value("seed").content;
    if (req.has_param("seed")) seed_text = req.get_param_value("seed");
    if (!seed_text.empty()) {
      try {
        std::size_t used = 0;
        in.seed = std::stoull(seed_text, &used);
        if (used != seed_text.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        ++requests_;
        ++failures_;
        return send(res, error_response(400, "bad_seed", "seed must be an unsigned integer"));
      }
    }
    in.grid = req.has_param("grid") && req.get_param_value("grid") == "1";
    send(res, inpaint(in));
  });

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    std::string code = res.status == 413 ? "payload_too_large" : res.status == 404 ? "not_found" : "http_error";
    res.set_content(nlohmann::json{{"code", code}, {"message", httplib::status_message(res.status)}}.dump(),
                    "application/json");
    return httplib::Server::HandlerResponse::Handled;
  });
}

bool InferenceService::listen() {
  if (bind() < 0) return false;
  return serve_bound();
}

int InferenceService::bind() {
  install_routes();
  if (options_.port == 0) return server_->bind_to_any_port(options_.host);
  return server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
}

bool InferenceService::serve_bound() {
  spdlog::info("serving checkpoint {} on {}:{}", hash_, options_.host, options_.port);
  return server_->listen_after_bind();
}

void InferenceService::stop() {
  if (server_) server_->stop();
}

void InferenceService::wait_until_ready() const {
  if (server_) server_->wait_until_ready();
}

}  // namespace wgain
