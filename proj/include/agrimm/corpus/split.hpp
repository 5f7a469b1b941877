#pragma once

#include "agrimm/corpus/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace agrimm::corpus {

inline constexpr std::string_view kSplitAlgorithmVersion = "stratified-xorshift64star-v1";

/// Classes with fewer records than this are pooled into one stratum.
inline constexpr std::size_t kMinStratumSize = 5;

struct CorpusSplit {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
};

/// Stratified per class_label; within each stratum ids are sorted, shuffled
/// with Fisher-Yates driven by one Xorshift64Star(seed) stream (strata in
/// label order, pooled stratum last), and the first round(ratio * n) go to
/// train. Requires 0 < ratio < 1; throws Errc::EmptyCorpus on no records.
CorpusSplit split_corpus(const CorpusManifest& manifest, double ratio, std::uint64_t seed);

/// Writes train_ids.txt, test_ids.txt and split.json into `dir`.
void write_split(const std::filesystem::path& dir, const CorpusSplit& split, double ratio,
                 std::uint64_t seed);

}  // namespace agrimm::corpus
