#include "thinkmt/core/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "thinkmt/core/error.hpp"
#include "thinkmt/core/hash.hpp"
#include "thinkmt/core/text.hpp"

namespace thinkmt {

namespace fs = std::filesystem;

fs::path manifest_path(const fs::path& data_path) {
  auto p = data_path;
  p += ".manifest.json";
  return p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<Json> read_jsonl(const fs::path& path) {
  const auto data = read_file(path);
  std::vector<Json> rows;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(data)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = Json::parse(line);
      if (!j.is_object()) throw ParseError(path.string() + ": expected a JSON object", line_no);
      rows.push_back(std::move(j));
    } catch (const Json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  return rows;
}

std::string dump_jsonl(const std::vector<Json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump(-1, ' ', false, Json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

void write_jsonl(const fs::path& path, const std::vector<Json>& rows) { write_file_atomic(path, dump_jsonl(rows)); }

namespace {

template <typename Record>
void write_dataset_impl(const fs::path& path, const Dataset<Record>& dataset, std::string_view kind) {
  dataset.validate();
  std::vector<Json> rows;
  rows.reserve(dataset.records.size());
  for (const auto& r : dataset.records) rows.push_back(to_json(r));
  const auto body = dump_jsonl(rows);
  Json manifest = dataset.manifest.is_object() ? dataset.manifest : Json::object();
  manifest["kind"] = kind;
  manifest["records"] = dataset.records.size();
  manifest["content_sha256"] = sha256_hex(body);
  write_file_atomic(path, body);
  write_file_atomic(manifest_path(path), manifest.dump(2) + "\n");
}

template <typename Record, typename FromJson>
Dataset<Record> read_dataset_impl(const fs::path& path, FromJson from_json) {
  Dataset<Record> ds;
  std::size_t line_no = 0;
  const auto data = read_file(path);
  for (auto line : text::split_lines(data)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      ds.records.push_back(from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  if (const auto mp = manifest_path(path); fs::exists(mp)) {
    try {
      ds.manifest = Json::parse(read_file(mp));
    } catch (const Json::parse_error& e) {
      throw ParseError(mp.string() + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace

void write_dataset(const fs::path& path, const ParallelDataset& dataset) { write_dataset_impl(path, dataset, "parallel"); }
void write_dataset(const fs::path& path, const TrainingDataset& dataset) { write_dataset_impl(path, dataset, "training"); }

ParallelDataset read_parallel_dataset(const fs::path& path) {
  auto ds = read_dataset_impl<ParallelRecord>(path, parallel_record_from_json);
  ds.validate();
  return ds;
}

TrainingDataset read_training_dataset(const fs::path& path) {
  return read_dataset_impl<TrainingExample>(path, training_example_from_json);
}

}  // namespace thinkmt
