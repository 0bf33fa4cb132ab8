#include "realexp/blackbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>

#include <httplib.h>

#include "realexp/json_io.hpp"
#include "realexp/parallel.hpp"

namespace realexp {

double score_builtin(const BuiltinModel& model, std::span<const double> x) {
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    if (x.size() != linear->w.size()) {
      throw ValidationError("linear model arity mismatch");
    }
    double out = linear->b;
    for (std::size_t j = 0; j < x.size(); ++j) out += linear->w[j] * x[j];
    return out;
  }
  if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
    if (x.size() != logistic->w.size()) {
      throw ValidationError("logistic model arity mismatch");
    }
    double z = logistic->b;
    for (std::size_t j = 0; j < x.size(); ++j) z += logistic->w[j] * x[j];
    return 1.0 / (1.0 + std::exp(-z));
  }
  const auto& lookup = std::get<LookupTreeModel>(model);
  return lookup.tree.predict(x);
}

BuiltinModel builtin_from_json(const nlohmann::json& spec) {
  const std::string type = spec.at("type").get<std::string>();
  if (type == "linear" || type == "logistic") {
    std::vector<double> w = spec.at("w").get<std::vector<double>>();
    const double b = spec.value("b", 0.0);
    if (w.empty()) throw ValidationError("builtin model needs weights");
    if (type == "linear") return LinearModel{std::move(w), b};
    return LogisticModel{std::move(w), b};
  }
  if (type == "lookup_tree") {
    return LookupTreeModel{tree_from_json(spec.at("rules"))};
  }
  throw ValidationError("unknown builtin model type: " + type);
}

nlohmann::json builtin_to_json(const BuiltinModel& model) {
  nlohmann::json out;
  if (const auto* linear = std::get_if<LinearModel>(&model)) {
    out["type"] = "linear";
    out["w"] = linear->w;
    out["b"] = linear->b;
  } else if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
    out["type"] = "logistic";
    out["w"] = logistic->w;
    out["b"] = logistic->b;
  } else {
    out["type"] = "lookup_tree";
    out["rules"] = tree_node_to_json(std::get<LookupTreeModel>(model).tree, 0);
  }
  return out;
}

ModelEndpoint ModelEndpoint::make_builtin(BuiltinModel model) {
  ModelEndpoint out;
  out.kind = Kind::Builtin;
  out.builtin = std::move(model);
  return out;
}

ModelEndpoint ModelEndpoint::subprocess(std::string command,
                                        double timeout_sec, int batch_size) {
  ModelEndpoint out;
  out.kind = Kind::Subprocess;
  out.target = std::move(command);
  out.timeout_sec = timeout_sec;
  out.batch_size = batch_size;
  return out;
}

ModelEndpoint ModelEndpoint::http(std::string url, double timeout_sec,
                                  int batch_size) {
  ModelEndpoint out;
  out.kind = Kind::Http;
  out.target = std::move(url);
  out.timeout_sec = timeout_sec;
  out.batch_size = batch_size;
  return out;
}

namespace {

std::vector<double> parse_scores(const std::string& line, int expected_id,
                                 std::size_t expected_count) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed response line: " + line);
  }
  if (!doc.is_object() || !doc.contains("id") || !doc.contains("scores") ||
      !doc.at("scores").is_array()) {
    throw ProtocolError("malformed response line: " + line);
  }
  if (doc.at("id").get<int>() != expected_id) {
    throw ProtocolError("out-of-order response id in line: " + line);
  }
  std::vector<double> scores;
  for (const auto& s : doc.at("scores")) {
    if (!s.is_number()) {
      throw ProtocolError("non-numeric score in line: " + line);
    }
    scores.push_back(s.get<double>());
  }
  if (scores.size() != expected_count) {
    throw ProtocolError("score count mismatch in line: " + line);
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw EvaluationError("endpoint returned a non-finite score");
    }
  }
  return scores;
}

// One child process speaking the line protocol over stdin/stdout.
class SubprocessSession {
 public:
  explicit SubprocessSession(const std::string& command) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw TransportError("cannot create pipes for: " + command);
    }
    pid_ = fork();
    if (pid_ < 0) throw TransportError("cannot fork for: " + command);
    if (pid_ == 0) {
      // Own process group, so teardown can reap the shell and its children.
      setpgid(0, 0);
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
  }

  ~SubprocessSession() {
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  SubprocessSession(const SubprocessSession&) = delete;
  SubprocessSession& operator=(const SubprocessSession&) = delete;

  void send_line(const std::string& line) {
    std::string payload = line;
    payload.push_back('\n');
    std::size_t sent = 0;
    while (sent < payload.size()) {
      const ssize_t wrote =
          write(in_fd_, payload.data() + sent, payload.size() - sent);
      if (wrote <= 0) throw TransportError("subprocess pipe closed on write");
      sent += static_cast<std::size_t>(wrote);
    }
  }

  // Reads one line, honoring the deadline. Returns false on timeout.
  bool read_line(std::string& line, double timeout_sec) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_sec);
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) return false;
      pollfd pfd{out_fd_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (ready == 0) return false;
      if (ready < 0) throw TransportError("poll failed on subprocess pipe");
      char chunk[4096];
      const ssize_t got = read(out_fd_, chunk, sizeof(chunk));
      if (got <= 0) {
        throw TransportError("subprocess closed its output before replying");
      }
      buffer_.append(chunk, static_cast<std::size_t>(got));
    }
  }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

std::vector<double> score_via_subprocess(
    const ModelEndpoint& endpoint,
    const std::vector<nlohmann::json>& instances) {
  std::vector<double> scores;
  scores.reserve(instances.size());

  // Timed-out chunks respawn the child and are retried up to 2 times.
  for (int attempt = 0;; ++attempt) {
    try {
      SubprocessSession session(endpoint.target);
      scores.clear();
      int id = 0;
      for (std::size_t at = 0; at < instances.size();
           at += static_cast<std::size_t>(endpoint.batch_size)) {
        const std::size_t hi = std::min(
            instances.size(), at + static_cast<std::size_t>(endpoint.batch_size));
        nlohmann::json request;
        request["id"] = id;
        request["instances"] =
            nlohmann::json(std::vector<nlohmann::json>(instances.begin() + static_cast<std::ptrdiff_t>(at),
                                                       instances.begin() + static_cast<std::ptrdiff_t>(hi)));
        session.send_line(request.dump());
        std::string line;
        if (!session.read_line(line, endpoint.timeout_sec)) {
          throw TransportError("timeout waiting for subprocess response");
        }
        auto chunk = parse_scores(line, id, hi - at);
        scores.insert(scores.end(), chunk.begin(), chunk.end());
        ++id;
      }
      return scores;
    } catch (const ProtocolError&) {
      throw;  // malformed replies are not retried
    } catch (const EvaluationError&) {
      throw;
    } catch (const TransportError&) {
      if (attempt >= 2) throw;
    }
  }
}

std::vector<double> score_via_http(const ModelEndpoint& endpoint,
                                   const std::vector<nlohmann::json>& instances) {
  // Split "http://host:port/path"
  const std::string& url = endpoint.target;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("http endpoint needs a full URL, got: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string base =
      path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : url.substr(path_start);

  for (int attempt = 0;; ++attempt) {
    try {
      httplib::Client client(base);
      client.set_connection_timeout(std::chrono::duration<double>(endpoint.timeout_sec));
      client.set_read_timeout(std::chrono::duration<double>(endpoint.timeout_sec));
      std::vector<double> scores;
      scores.reserve(instances.size());
      int id = 0;
      for (std::size_t at = 0; at < instances.size();
           at += static_cast<std::size_t>(endpoint.batch_size)) {
        const std::size_t hi = std::min(
            instances.size(), at + static_cast<std::size_t>(endpoint.batch_size));
        nlohmann::json request;
        request["id"] = id;
        request["instances"] =
            nlohmann::json(std::vector<nlohmann::json>(instances.begin() + static_cast<std::ptrdiff_t>(at),
                                                       instances.begin() + static_cast<std::ptrdiff_t>(hi)));
        auto res = client.Post(path, request.dump() + "\n", "application/json");
        if (!res) {
          throw TransportError("http request failed: " +
                               httplib::to_string(res.error()));
        }
        if (res->status != 200) {
          throw TransportError("http endpoint returned status " +
                               std::to_string(res->status));
        }
        std::string line = res->body;
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
          line.pop_back();
        }
        auto chunk = parse_scores(line, id, hi - at);
        scores.insert(scores.end(), chunk.begin(), chunk.end());
        ++id;
      }
      return scores;
    } catch (const ProtocolError&) {
      throw;
    } catch (const EvaluationError&) {
      throw;
    } catch (const TransportError&) {
      if (attempt >= 2) throw;
    }
  }
}

}  // namespace

std::vector<double> score_batch(const ModelEndpoint& endpoint,
                                const std::vector<nlohmann::json>& instances,
                                unsigned threads) {
  if (instances.empty()) throw ValidationError("score batch must be non-empty");
  if (endpoint.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(endpoint.timeout_sec > 0)) throw ValidationError("timeout must be > 0");

  if (endpoint.kind == ModelEndpoint::Kind::Builtin) {
    std::vector<double> scores(instances.size());
    parallel_for(instances.size(), threads, [&](std::size_t i) {
      const nlohmann::json& payload = instances[i];
      if (!payload.is_array()) {
        throw ValidationError(
            "builtin models score numeric feature vectors only");
      }
      std::vector<double> x;
      x.reserve(payload.size());
      for (const auto& cell : payload) {
        if (!cell.is_number()) {
          throw ValidationError(
              "builtin models score numeric feature vectors only");
        }
        x.push_back(cell.get<double>());
      }
      const double score = score_builtin(endpoint.builtin, x);
      if (!std::isfinite(score)) {
        throw EvaluationError("builtin model produced a non-finite score");
      }
      scores[i] = score;
    });
    return scores;
  }
  if (endpoint.kind == ModelEndpoint::Kind::Subprocess) {
    return score_via_subprocess(endpoint, instances);
  }
  return score_via_http(endpoint, instances);
}

std::vector<double> mask_and_score(const ModelEndpoint& endpoint,
                                   const AdaptedInstance& instance,
                                   const std::vector<Mask>& masks,
                                   unsigned threads) {
  if (masks.empty()) throw ValidationError("mask batch must be non-empty");
  std::vector<nlohmann::json> payloads;
  payloads.reserve(masks.size());
  for (const Mask& mask : masks) {
    payloads.push_back(wire_payload(instance, mask));
  }
  return score_batch(endpoint, payloads, threads);
}

}  // namespace realexp
