#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "bfnas/config.hpp"
#include "bfnas/search.hpp"
#include "bfnas/surrogate.hpp"

namespace bfnas {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("bad numeric field '" + std::string(s) + "'");
  return v;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : std::string();
}

inline std::uint64_t embedding_hash(const ArchEmbedding& e) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double d : e) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, sizeof(bits));
    for (int shift = 0; shift < 64; shift += 8) {
      h ^= (bits >> shift) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

// Genome strings contain commas, so the genome column is always quoted.
inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    if (pos < line.size() && line[pos] == '"') {
      std::size_t close = line.find('"', pos + 1);
      if (close == std::string::npos) throw IoError("unterminated quote in csv row");
      fields.push_back(line.substr(pos + 1, close - pos - 1));
      pos = close + 1;
      if (pos < line.size() && line[pos] == ',') ++pos;
      else if (pos >= line.size()) break;
      else throw IoError("malformed csv row near quote");
    } else {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
      if (pos == line.size()) {  // trailing empty field
        fields.emplace_back();
        break;
      }
    }
  }
  return fields;
}

}  // namespace detail

inline constexpr char kArchiveCsvHeader[] = "genome,f1l,f2l,f3,f1h,f2h,generation";

inline void write_archive_csv(const std::filesystem::path& path,
                              const std::vector<ArchiveEntry>& entries) {
  auto out = detail::open_out(path);
  out << kArchiveCsvHeader << '\n';
  for (const auto& e : entries) {
    out << '"' << e.genome.to_string() << '"' << ',' << format_optional(e.record.f1l) << ','
        << format_optional(e.record.f2l) << ',' << format_optional(e.record.f3) << ','
        << format_optional(e.record.f1h) << ',' << format_optional(e.record.f2h) << ','
        << e.generation << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::vector<ArchiveEntry> read_archive_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kArchiveCsvHeader)
    throw IoError("unexpected header in " + path.string());
  std::vector<ArchiveEntry> entries;
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (fields.size() != 7) throw IoError("bad row in " + path.string());
    ArchiveEntry e;
    e.genome = Genome::parse(fields[0]);
    e.record.f1l = opt(fields[1]);
    e.record.f2l = opt(fields[2]);
    e.record.f3 = opt(fields[3]);
    e.record.f1h = opt(fields[4]);
    e.record.f2h = opt(fields[5]);
    e.generation = static_cast<int>(parse_double(fields[6]));
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void write_surrogate_csv(const std::filesystem::path& path, const TrainingSet& s) {
  auto out = detail::open_out(path);
  out << "genome,embedding_hash,f1h,f2h,label\n";
  for (const auto& rec : s.records()) {
    out << '"' << rec.genome.to_string() << '"' << ',' << hex64(embedding_hash(rec.embedding))
        << ',' << format_double(rec.f1h) << ',' << format_double(rec.f2h) << ','
        << format_double(rec.label) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_history_jsonl(const std::filesystem::path& path,
                                const std::vector<GenerationStat>& history) {
  auto out = detail::open_out(path);
  for (const auto& h : history) {
    nlohmann::json j;
    j["generation"] = h.generation;
    j["archive_size"] = h.archive_size;
    j["hv"] = h.hv;
    j["elapsed_ms"] = h.elapsed_ms;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::vector<GenerationStat> read_history_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<GenerationStat> history;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IoError("bad jsonl line in " + path.string());
    GenerationStat h;
    h.generation = j.value("generation", 0);
    h.archive_size = j.value("archive_size", 0);
    h.hv = j.value("hv", 0.0);
    h.elapsed_ms = j.value("elapsed_ms", 0.0);
    history.push_back(h);
  }
  return history;
}

inline void write_config_json(const std::filesystem::path& path, const RunConfig& cfg) {
  auto out = detail::open_out(path);
  out << config_to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

// Training-loss log for supernet/standalone runs.
inline void write_train_log_csv(const std::filesystem::path& path,
                                const std::vector<micronet::EpochLog>& log) {
  auto out = detail::open_out(path);
  out << "epoch,adv_loss,clean_val_err,adv_val_err\n";
  for (const auto& e : log)
    out << e.epoch << ',' << format_double(e.adv_loss) << ',' << format_double(e.clean_val_err)
        << ',' << format_double(e.adv_val_err) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bfnas
