#pragma once

// Client for an external model server speaking newline-delimited JSON over
// stdio. Requests: {"id": int, "op": "score"|"features", "image": path,
// "out": path?}. Responses arrive in request order: {"id", "score"},
// {"id", "out"} or {"id", "error"}.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <sys/types.h>
#include <vector>

namespace qregion {

class BridgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BridgeRequest {
  int id = 0;
  std::string op;  // "score" or "features"
  std::filesystem::path image;
  std::optional<std::filesystem::path> out;

  std::string to_json_line() const;
};

struct BridgeResponse {
  int id = 0;
  std::optional<double> score;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> error;

  /// Throws BridgeError when the line is not a valid response object.
  static BridgeResponse parse(const std::string& line);
};

class BridgeClient {
 public:
  /// Runs `command` through /bin/sh with piped stdin/stdout.
  explicit BridgeClient(const std::string& command);
  ~BridgeClient();
  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  void send(const BridgeRequest& request);
  /// Writes an arbitrary line.
  void send_line(const std::string& line);
  BridgeResponse receive();

  /// Pipelined round trip; responses are checked against request ids.
  std::vector<BridgeResponse> exchange(std::span<const BridgeRequest> requests, std::size_t window = 16);

  double score(const std::filesystem::path& image);
  std::filesystem::path features(const std::filesystem::path& image, const std::filesystem::path& out);

  /// Closes the server's stdin and waits for it; returns its exit status.
  int close();

 private:
  int next_id_ = 0;
  pid_t pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
};

}  // namespace qregion
