#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "thinkmt/core/jsonl.hpp"
#include "thinkmt/core/types.hpp"

namespace testsupport {

inline std::filesystem::path test_dir() { return THINKMT_TEST_DIR; }

inline std::string golden(const std::string& name) {
  return thinkmt::read_file(test_dir() / "golden" / name);
}

inline thinkmt::Json fixture(const std::string& name) {
  return thinkmt::Json::parse(thinkmt::read_file(test_dir() / "fixtures" / name));
}

/// A fresh directory removed on scope exit.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("thinkmt-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline thinkmt::LangPair en_fr() { return {"English", "French", "eng_Latn", "fra_Latn"}; }
inline thinkmt::LangPair en_xh() { return {"English", "Xhosa", "eng_Latn", "xho_Latn"}; }

inline thinkmt::ParallelRecord record(std::string id, std::string src, std::string tgt,
                                      thinkmt::LangPair pair = en_fr()) {
  return {std::move(id), std::move(src), std::move(tgt), std::move(pair)};
}

inline const char* kMiceSource =
    "\"We now have 4-month-old mice that are non-diabetic that used to be diabetic,\" he added.";

}  // namespace testsupport
