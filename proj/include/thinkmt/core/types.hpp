#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace thinkmt {

using Json = nlohmann::ordered_json;

/// A translation direction. Names are what prompts show ("English"),
/// codes are what benchmarks use ("eng_Latn").
struct LangPair {
  std::string src;
  std::string tgt;
  std::string src_code;
  std::string tgt_code;

  /// Throws InvalidArgument when a name is empty or src == tgt.
  void validate() const;

  bool operator==(const LangPair&) const = default;
};

/// One source/target pair of a parallel dataset.
struct ParallelRecord {
  std::string id;
  std::string source;
  std::string target;
  LangPair pair;

  void validate() const;

  bool operator==(const ParallelRecord&) const = default;
};

enum class TrainingMode { io, cot };

std::string_view to_string(TrainingMode mode);
TrainingMode training_mode_from_string(std::string_view s);

/// One fine-tuning row.
struct TrainingExample {
  std::string id;
  std::string prompt;
  std::string completion;
  TrainingMode mode = TrainingMode::io;
  std::map<std::string, std::string> meta;

  /// Checks the completion against the mode: cot rows must follow the
  /// thinking-target grammar, io rows must not contain a think marker.
  void validate() const;

  bool operator==(const TrainingExample&) const = default;
};

enum class DatasetKind { parallel, training };

/// An ordered list of records plus the manifest describing how it was made.
template <typename Record>
struct Dataset {
  std::vector<Record> records;
  Json manifest = Json::object();

  /// Ids must be unique and every record must validate.
  void validate() const;
};

using ParallelDataset = Dataset<ParallelRecord>;
using TrainingDataset = Dataset<TrainingExample>;

Json to_json(const ParallelRecord& r);
Json to_json(const TrainingExample& r);
ParallelRecord parallel_record_from_json(const Json& j);
TrainingExample training_example_from_json(const Json& j);

}  // namespace thinkmt
