#include "zwsim/sniff.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace zwsim::sniff {
namespace {

constexpr std::array<std::pair<TraceStatus, std::string_view>, 6> kStatusNames = {{
    {TraceStatus::Delivered, "delivered"},
    {TraceStatus::Lost, "lost"},
    {TraceStatus::CrcError, "crc_error"},
    {TraceStatus::IgnoredNotIncluded, "ignored_not_included"},
    {TraceStatus::QueuedBehindSlot, "queued_behind_slot"},
    {TraceStatus::DecryptFailed, "decrypt_failed"},
}};

std::string quote_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

template <typename T>
T parse_number(std::string_view s, int base, std::size_t line) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::runtime_error(fmt::format("trace line {}: bad number '{}'", line, s));
  return v;
}

SimTime parse_time(std::string_view s, std::size_t line) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || s.size() - dot != 4)
    throw std::runtime_error(fmt::format("trace line {}: time '{}' needs 3 decimals", line, s));
  const auto whole = parse_number<std::int64_t>(s.substr(0, dot), 10, line);
  const auto frac = parse_number<std::int64_t>(s.substr(dot + 1), 10, line);
  return SimTime{whole * 1000 + frac};
}

}  // namespace

std::string_view to_string(TraceStatus s) {
  for (const auto& [k, name] : kStatusNames)
    if (k == s) return name;
  return "unknown";
}

TraceStatus status_from_string(std::string_view s) {
  for (const auto& [k, name] : kStatusNames)
    if (name == s) return k;
  throw std::invalid_argument(fmt::format("unknown trace status '{}'", s));
}

const TraceRecord& Trace::record(const wire::MacFrame& frame, TraceStatus outcome, SimTime now, std::string note) {
  if (!records_.empty() && now < records_.back().time)
    throw std::logic_error("trace time went backwards");
  TraceRecord r;
  r.line_no = records_.size() + 1;
  r.time = now;
  r.home = frame.home;
  r.src = frame.src;
  r.dst = frame.dst;
  r.command = wire::payload_name(frame.payload);
  r.status = outcome;
  r.note = std::move(note);
  records_.push_back(std::move(r));
  return records_.back();
}

void Trace::annotate(std::uint64_t line_no, TraceStatus status, std::string_view note) {
  auto& r = records_.at(line_no - 1);
  r.status = status;
  if (!note.empty()) append_note(line_no, note);
}

void Trace::append_note(std::uint64_t line_no, std::string_view note) {
  auto& r = records_.at(line_no - 1);
  if (!r.note.empty()) r.note += "; ";
  r.note += note;
}

std::string to_csv(const std::vector<TraceRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    const auto ms = r.time.count();
    out += fmt::format("{},{}.{:03},{:08X},{},{},{},{},{}\n", r.line_no, ms / 1000, ms % 1000, r.home.value,
                       r.src.value(), r.dst.value(), quote_field(r.command), to_string(r.status),
                       quote_field(r.note));
  }
  return out;
}

std::vector<TraceRecord> from_csv(std::string_view text) {
  std::vector<TraceRecord> records;
  std::size_t line_idx = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_idx;
    if (line_idx == 1) {
      if (line != kCsvHeader) throw std::runtime_error("trace CSV header mismatch");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::runtime_error(fmt::format("trace line {}: expected 8 fields", line_idx));
    TraceRecord r;
    r.line_no = parse_number<std::uint64_t>(f[0], 10, line_idx);
    r.time = parse_time(f[1], line_idx);
    r.home.value = parse_number<std::uint32_t>(f[2], 16, line_idx);
    r.src = NodeId{parse_number<int>(f[3], 10, line_idx)};
    r.dst = NodeId{parse_number<int>(f[4], 10, line_idx)};
    r.command = f[5];
    r.status = status_from_string(f[6]);
    r.note = f[7];
    records.push_back(std::move(r));
  }
  return records;
}

void export_csv(const std::vector<TraceRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path.string());
  const std::string csv = to_csv(records);
  out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
  if (!out) throw std::runtime_error("failed writing trace file: " + path.string());
}

std::vector<TraceRecord> import_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

}  // namespace zwsim::sniff
