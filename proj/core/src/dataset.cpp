#include "logitcalib/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "logitcalib/error.hpp"

namespace logitcalib {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
    case Split::kUnseen: return "unseen";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  if (name == "unseen") return Split::kUnseen;
  throw DataError(fmt::format("unknown split tag '{}'", name));
}

DatasetFormat parse_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "csv") return DatasetFormat::kCsv;
  throw UsageError(fmt::format("unknown dataset format '{}'", name));
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? DatasetFormat::kCsv
                                    : DatasetFormat::kJsonl;
}

ClassRegistry::ClassRegistry(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw DataError("class registry needs at least two classes");
  }
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DataError("class names must be non-empty");
    if (!seen.insert(n).second) {
      throw DataError(fmt::format("duplicate class name '{}'", n));
    }
  }
}

std::optional<std::size_t> ClassRegistry::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<LogitRecord> SplitDataset::select(Split split) const {
  std::vector<LogitRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const LogitRecord& r) { return r.split == split; });
  return out;
}

std::size_t SplitDataset::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [split](const LogitRecord& r) { return r.split == split; }));
}

std::vector<std::size_t> SplitDataset::class_counts(Split split) const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (const auto& r : records) {
    if (r.split == split && r.label && *r.label < counts.size()) {
      ++counts[*r.label];
    }
  }
  return counts;
}

namespace {

void validate_record(const LogitRecord& r, std::size_t k,
                     const std::string& where) {
  if (r.logits.size() != k) {
    throw DataError(fmt::format("{}: expected {} logits, found {}", where, k,
                                r.logits.size()));
  }
  for (double v : r.logits) {
    if (!std::isfinite(v)) {
      throw DataError(fmt::format("{}: non-finite logit", where));
    }
  }
  if (r.split == Split::kUnseen) {
    if (r.label) {
      throw DataError(fmt::format("{}: unseen records must not carry a label",
                                  where));
    }
  } else {
    if (!r.label) {
      throw DataError(fmt::format("{}: {} records require a label", where,
                                  to_string(r.split)));
    }
    if (*r.label >= k) {
      throw DataError(fmt::format("{}: class index {} out of range [0, {})",
                                  where, *r.label, k));
    }
  }
  if (r.tag && r.tag->empty()) {
    throw DataError(fmt::format("{}: tag must be non-empty when present",
                                where));
  }
}

}  // namespace

void validate(const SplitDataset& data) {
  const std::size_t k = data.num_classes();
  if (k < 2) throw DataError("dataset has no class registry");
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    validate_record(data.records[i], k, fmt::format("record {}", i));
  }
}

void require_train_coverage(const SplitDataset& data,
                            std::size_t min_per_class) {
  const auto counts = data.class_counts(Split::kTrain);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < min_per_class) {
      throw DataError(fmt::format(
          "train split has {} records of class '{}', need at least {}",
          counts[c], data.registry.name(c), min_per_class));
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("cannot read '{}'", path.string()));
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

std::filesystem::path registry_path_for(const std::filesystem::path& dataset) {
  auto p = dataset;
  p += ".classes.json";
  return p;
}

ClassRegistry load_registry(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    const json doc = json::parse(text);
    return ClassRegistry(doc.at("classes").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw DataError(
        fmt::format("malformed class registry '{}': {}", path.string(), e.what()));
  }
}

void save_registry(const ClassRegistry& registry,
                   const std::filesystem::path& path) {
  json doc;
  doc["classes"] = registry.names();
  write_file(path, doc.dump() + "\n");
}

// --- JSONL -----------------------------------------------------------------

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::size_t resolve_label(const ClassRegistry& registry, std::string_view name,
                          const std::string& where) {
  const auto idx = registry.index_of(name);
  if (!idx) {
    throw DataError(fmt::format("{}: unknown class label '{}'", where, name));
  }
  return *idx;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

SplitDataset parse_jsonl(std::string_view text, const ClassRegistry& registry) {
  SplitDataset data{registry, {}};
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const std::string where = fmt::format("line {}", i + 1);
    LogitRecord rec;
    try {
      const json obj = json::parse(lines[i]);
      if (!obj.is_object()) throw DataError(where + ": expected a JSON object");
      for (const auto& v : obj.at("logits")) {
        if (!v.is_number()) throw DataError(where + ": logits must be numbers");
        rec.logits.push_back(v.get<double>());
      }
      rec.split = parse_split(obj.at("split").get<std::string>());
      if (const auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
        rec.label = resolve_label(registry, it->get<std::string>(), where);
      }
      if (const auto it = obj.find("tag"); it != obj.end() && !it->is_null()) {
        rec.tag = it->get<std::string>();
      }
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: malformed record: {}", where, e.what()));
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("line ")) throw;
      throw DataError(fmt::format("{}: {}", where, e.what()));
    }
    validate_record(rec, registry.size(), where);
    data.records.push_back(std::move(rec));
  }
  return data;
}

std::string to_jsonl(const SplitDataset& data) {
  std::string out;
  for (const auto& r : data.records) {
    out += "{\"logits\":[";
    for (std::size_t j = 0; j < r.logits.size(); ++j) {
      if (j) out += ',';
      out += format_double(r.logits[j]);
    }
    out += "],\"label\":";
    out += r.label ? json(data.registry.name(*r.label)).dump() : "null";
    out += ",\"split\":\"";
    out += to_string(r.split);
    out += '"';
    if (r.tag) {
      out += ",\"tag\":";
      out += json(*r.tag).dump();
    }
    out += "}\n";
  }
  return out;
}

// --- CSV -------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

double parse_double(std::string_view field, const std::string& where) {
  // strtod rather than from_chars: libstdc++ 11 lacks floating from_chars.
  const std::string buf(field);
  if (buf.empty()) throw DataError(where + ": empty logit cell");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE) {
    throw DataError(fmt::format("{}: cannot parse logit '{}'", where, field));
  }
  return v;
}

void check_csv_safe(std::string_view field) {
  if (field.find_first_of(",\"\r\n") != std::string_view::npos) {
    throw DataError(fmt::format(
        "value '{}' contains characters not representable in CSV", field));
  }
}

}  // namespace

SplitDataset parse_csv(std::string_view text, const ClassRegistry& registry) {
  SplitDataset data{registry, {}};
  const std::size_t k = registry.size();
  const auto lines = split_lines(text);
  if (lines.empty() || is_blank(lines.front())) {
    throw DataError("line 1: missing CSV header");
  }

  const auto header = split_fields(lines.front());
  bool has_tag = false;
  {
    std::vector<std::string> expected;
    for (std::size_t j = 0; j < k; ++j) expected.push_back(fmt::format("logit_{}", j));
    expected.emplace_back("label");
    expected.emplace_back("split");
    has_tag = header.size() == k + 3 && header.back() == "tag";
    const std::size_t n = has_tag ? k + 2 : header.size();
    if (n != k + 2 || !std::equal(expected.begin(), expected.end(), header.begin())) {
      throw DataError(fmt::format(
          "line 1: CSV header does not match {} classes (expected "
          "logit_0..logit_{},label,split[,tag])",
          k, k - 1));
    }
  }

  const std::size_t width = k + (has_tag ? 3 : 2);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const std::string where = fmt::format("line {}", i + 1);
    const auto fields = split_fields(lines[i]);
    if (fields.size() != width) {
      throw DataError(fmt::format("{}: expected {} fields, found {}", where,
                                  width, fields.size()));
    }
    LogitRecord rec;
    rec.logits.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      rec.logits.push_back(parse_double(fields[j], where));
    }
    if (!fields[k].empty()) rec.label = resolve_label(registry, fields[k], where);
    try {
      rec.split = parse_split(fields[k + 1]);
    } catch (const Error& e) {
      throw DataError(fmt::format("{}: {}", where, e.what()));
    }
    if (has_tag && !fields[k + 2].empty()) rec.tag = std::string(fields[k + 2]);
    validate_record(rec, k, where);
    data.records.push_back(std::move(rec));
  }
  return data;
}

std::string to_csv(const SplitDataset& data) {
  const std::size_t k = data.num_classes();
  const bool has_tag = std::any_of(data.records.begin(), data.records.end(),
                                   [](const LogitRecord& r) { return r.tag.has_value(); });
  std::string out;
  for (std::size_t j = 0; j < k; ++j) out += fmt::format("logit_{},", j);
  out += has_tag ? "label,split,tag\n" : "label,split\n";
  for (const auto& r : data.records) {
    for (double v : r.logits) {
      out += format_double(v);
      out += ',';
    }
    if (r.label) {
      const auto& name = data.registry.name(*r.label);
      check_csv_safe(name);
      out += name;
    }
    out += ',';
    out += to_string(r.split);
    if (has_tag) {
      out += ',';
      if (r.tag) {
        check_csv_safe(*r.tag);
        out += *r.tag;
      }
    }
    out += '\n';
  }
  return out;
}

SplitDataset load_dataset(const std::filesystem::path& path,
                          DatasetFormat format,
                          const std::optional<ClassRegistry>& registry) {
  const ClassRegistry reg =
      registry ? *registry : load_registry(registry_path_for(path));
  const std::string text = read_file(path);
  try {
    return format == DatasetFormat::kCsv ? parse_csv(text, reg)
                                         : parse_jsonl(text, reg);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_dataset(const SplitDataset& data, const std::filesystem::path& path,
                  DatasetFormat format) {
  validate(data);
  write_file(path, format == DatasetFormat::kCsv ? to_csv(data) : to_jsonl(data));
  save_registry(data.registry, registry_path_for(path));
}

}  // namespace logitcalib
