#include "agrimm/corpus/split.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/common/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace agrimm::corpus {

CorpusSplit split_corpus(const CorpusManifest& manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(Errc::OutOfRange, "ratio", "split ratio must lie strictly between 0 and 1");
  }
  if (manifest.records.empty()) throw Error(Errc::EmptyCorpus, "");

  std::map<std::string, std::vector<std::string>> by_class;
  for (const auto& r : manifest.records) by_class[r.class_label].push_back(r.id);

  std::vector<std::vector<std::string>> strata;
  std::vector<std::string> pooled;
  for (auto& [label, ids] : by_class) {
    if (ids.size() >= kMinStratumSize) {
      strata.push_back(std::move(ids));
    } else {
      pooled.insert(pooled.end(), ids.begin(), ids.end());
    }
  }
  if (!pooled.empty()) strata.push_back(std::move(pooled));

  Xorshift64Star rng(seed);
  CorpusSplit split;
  for (auto& ids : strata) {
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = ids.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(ids[i - 1], ids[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ids.size())));
    split.train.insert(split.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void write_split(const std::filesystem::path& dir, const CorpusSplit& split, double ratio,
                 std::uint64_t seed) {
  auto join = [](const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
      out += id;
      out += '\n';
    }
    return out;
  };
  write_text_file_atomic(dir / "train_ids.txt", join(split.train));
  write_text_file_atomic(dir / "test_ids.txt", join(split.test));
  const json header{{"ratio", ratio},
                    {"seed", seed},
                    {"algorithm_version", kSplitAlgorithmVersion},
                    {"train_count", split.train.size()},
                    {"test_count", split.test.size()}};
  write_text_file_atomic(dir / "split.json", header.dump(2) + "\n");
}

}  // namespace agrimm::corpus
