#pragma once

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "paraspec/hash.hpp"
#include "paraspec/noise.hpp"
#include "paraspec/record.hpp"
#include "paraspec/snapshot.hpp"
#include "paraspec/spectrum.hpp"

namespace paraspec {

struct OutputFile {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunStatus {
  std::string id;
  std::string status;  ///< ok | failed | cancelled | not_run
  std::string message;
};

/// What one CLI invocation wrote; every listed file exists and carries its checksum.
struct RunManifest {
  std::string tool_version;
  std::string subcommand;
  std::string config_hash;
  std::string started;
  std::string finished;
  std::vector<OutputFile> outputs;
  std::vector<RunStatus> runs;
  bool partial = false;  ///< plot data emitted from an incomplete record
  std::vector<std::string> diagnostics;

  bool succeeded() const {
    if (runs.empty()) return false;
    for (const auto& r : runs)
      if (r.status != "ok") return false;
    return true;
  }
};

/// UTC, ISO 8601 with seconds.
inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes bytes to dir/name (creating dir) and records the file in the manifest.
inline const OutputFile& write_output(RunManifest& m, const std::string& dir, const std::string& name,
                                      std::string_view bytes) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
  }
  m.outputs.push_back({path, sha256_hex(bytes), bytes.size()});
  return m.outputs.back();
}

/// Registers a file written elsewhere (plot data); checksum taken from disk.
inline void register_output(RunManifest& m, const std::string& path) {
  m.outputs.push_back({path, sha256_file(path), std::filesystem::file_size(path)});
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json outs = nlohmann::json::array(), runs = nlohmann::json::array();
  for (const auto& o : m.outputs) outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  for (const auto& r : m.runs) {
    nlohmann::json j = {{"id", r.id}, {"status", r.status}};
    if (!r.message.empty()) j["message"] = r.message;
    runs.push_back(j);
  }
  return {{"tool_version", m.tool_version}, {"subcommand", m.subcommand}, {"config_hash", m.config_hash},
          {"started", m.started},           {"finished", m.finished},     {"outputs", outs},
          {"runs", runs},                   {"partial_emission", m.partial}, {"diagnostics", m.diagnostics},
          {"succeeded", m.succeeded()}};
}

/// Writes manifest.json last; it is not listed in its own output list.
inline std::string write_manifest(RunManifest& m, const std::string& dir) {
  m.finished = utc_timestamp();
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_json(m).dump(2) << '\n';
  return path;
}

/// Full-precision JSON numbers: nlohmann prints doubles with round-trip precision.
inline nlohmann::json to_json(const SpectrumResult& s) {
  nlohmann::json mult = nlohmann::json::array();
  for (auto [a, b] : s.multiplets) mult.push_back({a + 1, b + 1});
  std::vector<double> gaps;
  for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) gaps.push_back(s.eigenvalues[i] - s.eigenvalues[i - 1]);
  return {{"eigenvalues", s.eigenvalues}, {"residuals", s.residuals}, {"multiplets", mult},
          {"gaps", gaps},               {"iterations", s.iterations}, {"restarts", s.restarts},
          {"tolerance", s.tolerance}};
}

inline nlohmann::json to_json(const EnhancedNoise& e) {
  const auto& g = e.grid();
  return {{"seed", e.seed},
          {"dim", g.dim()},
          {"L", g.side_length()},
          {"N", g.modes_per_dim()},
          {"mollifier", e.mollifier.name()},
          {"epsilon", e.mollifier.epsilon},
          {"c_eps", e.c_eps}};
}

inline std::string snapshot_bytes(const Field& f) {
  const auto b = snapshot::encode(f);
  return std::string(b.begin(), b.end());
}

}  // namespace paraspec
