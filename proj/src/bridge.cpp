#include "qregion/bridge.hpp"

#include <json.hpp>

#include <csignal>
#include <mutex>
#include <sys/wait.h>
#include <unistd.h>

namespace qregion {

using nlohmann::json;

std::string BridgeRequest::to_json_line() const {
  json j{{"id", id}, {"op", op}, {"image", image.string()}};
  if (out) j["out"] = out->string();
  return j.dump() + "\n";
}

BridgeResponse BridgeResponse::parse(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw BridgeError(std::string("bridge response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer())
    throw BridgeError("bridge response lacks an integer id: " + line);
  BridgeResponse r;
  r.id = j["id"].get<int>();
  if (j.contains("error")) r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
  if (j.contains("score")) {
    if (!j["score"].is_number()) throw BridgeError("bridge score is not a number: " + line);
    r.score = j["score"].get<double>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw BridgeError("bridge out is not a string: " + line);
    r.out = j["out"].get<std::string>();
  }
  if (!r.error && !r.score && !r.out) throw BridgeError("bridge response has no payload: " + line);
  return r;
}

BridgeClient::BridgeClient(const std::string& command) {
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });

  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw BridgeError("pipe() failed");
  if (pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw BridgeError("pipe() failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw BridgeError("fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
  if (!to_child_ || !from_child_) throw BridgeError("fdopen() failed");
}

BridgeClient::~BridgeClient() {
  try {
    close();
  } catch (...) {
  }
}

void BridgeClient::send_line(const std::string& line) {
  if (!to_child_) throw BridgeError("bridge is closed");
  const std::string text = line.empty() || line.back() != '\n' ? line + "\n" : line;
  if (std::fwrite(text.data(), 1, text.size(), to_child_) != text.size() || std::fflush(to_child_) != 0)
    throw BridgeError("bridge server stopped accepting requests");
}

void BridgeClient::send(const BridgeRequest& request) { send_line(request.to_json_line()); }

BridgeResponse BridgeClient::receive() {
  if (!from_child_) throw BridgeError("bridge is closed");
  std::string line;
  for (int ch; (ch = std::fgetc(from_child_)) != EOF;) {
    if (ch == '\n') return BridgeResponse::parse(line);
    line.push_back(static_cast<char>(ch));
  }
  throw BridgeError("bridge server closed its output");
}

std::vector<BridgeResponse> BridgeClient::exchange(std::span<const BridgeRequest> requests, std::size_t window) {
  std::vector<BridgeResponse> out;
  out.reserve(requests.size());
  std::size_t sent = 0;
  while (out.size() < requests.size()) {
    while (sent < requests.size() && sent - out.size() < std::max<std::size_t>(window, 1)) send(requests[sent++]);
    BridgeResponse r = receive();
    if (r.id != requests[out.size()].id)
      throw BridgeError("bridge response id " + std::to_string(r.id) + " does not match request id " +
                        std::to_string(requests[out.size()].id));
    out.push_back(std::move(r));
  }
  return out;
}

double BridgeClient::score(const std::filesystem::path& image) {
  const BridgeRequest req{next_id_++, "score", image, std::nullopt};
  const BridgeResponse r = exchange(std::span(&req, 1)).front();
  if (r.error) throw BridgeError("bridge score failed for " + image.string() + ": " + *r.error);
  if (!r.score) throw BridgeError("bridge returned no score for " + image.string());
  return *r.score;
}

std::filesystem::path BridgeClient::features(const std::filesystem::path& image, const std::filesystem::path& out) {
  const BridgeRequest req{next_id_++, "features", image, out};
  const BridgeResponse r = exchange(std::span(&req, 1)).front();
  if (r.error) throw BridgeError("bridge features failed for " + image.string() + ": " + *r.error);
  if (!r.out) throw BridgeError("bridge returned no feature path for " + image.string());
  return *r.out;
}

int BridgeClient::close() {
  if (to_child_) {
    std::fclose(to_child_);
    to_child_ = nullptr;
  }
  if (from_child_) {
    std::fclose(from_child_);
    from_child_ = nullptr;
  }
  int status = 0;
  if (pid_ > 0) {
    waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  return 0;
}

}  // namespace qregion
