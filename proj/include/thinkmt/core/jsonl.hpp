#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "thinkmt/core/types.hpp"

namespace thinkmt {

/// Sidecar manifest path for a dataset file: `<path>.manifest.json`.
std::filesystem::path manifest_path(const std::filesystem::path& data_path);

/// Reads a JSON-lines file. Blank lines are skipped; a malformed line throws
/// ParseError carrying its 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Writes one compact object per line, keys in insertion order.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

/// Serialized bytes of the rows exactly as write_jsonl emits them.
std::string dump_jsonl(const std::vector<Json>& rows);

/// Writes `dataset` and its sidecar manifest. The manifest gains
/// `kind`, `records` and `content_sha256` fields.
void write_dataset(const std::filesystem::path& path, const ParallelDataset& dataset);
void write_dataset(const std::filesystem::path& path, const TrainingDataset& dataset);

/// Reads a dataset and, if present, its sidecar manifest.
ParallelDataset read_parallel_dataset(const std::filesystem::path& path);
TrainingDataset read_training_dataset(const std::filesystem::path& path);

/// Writes a file only through a temporary sibling + rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace thinkmt
