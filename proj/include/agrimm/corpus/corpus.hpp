#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace agrimm::corpus {

enum class Component { FineGrained, Disease, Counting };

/// The closed nine-bucket taxonomy. OrnamentalOther doubles as the
/// fallback for labels the taxonomy map does not cover.
enum class Category {
  CerealsGrasses,
  LegumesPulses,
  Fruits,
  VegetablesTubers,
  Industrial,
  MedicinalSpices,
  ForestryTimber,
  WeedsWild,
  OrnamentalOther,
};

inline constexpr std::size_t kCategoryCount = 9;

enum class SplitTag { Train, Test, Unassigned };

std::string_view to_string(Component c);
std::string_view to_string(Category c);
std::string_view to_string(SplitTag s);
/// Case-insensitive; accepts snake_case too. Throws Errc::UnknownComponent.
Component parse_component(std::string_view text);
/// Case-, space- and punctuation-insensitive ("Cereals & Grasses",
/// "cereals_grasses"). Returns nullopt for anything outside the nine values.
std::optional<Category> parse_category(std::string_view text);

struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

struct ImageRecord {
  std::string id;
  std::string source_dataset;
  std::string image_path;
  std::string class_label;
  Component component = Component::FineGrained;
  Category category = Category::OrnamentalOther;
  std::optional<std::uint64_t> annotation_count;  // present iff Counting
  SplitTag split = SplitTag::Unassigned;
};

struct SourceDataset {
  std::string name;
  Component component = Component::FineGrained;
  std::vector<std::size_t> records;  // indices into CorpusManifest::records
};

/// class_label -> category with trim+casefold keys.
class TaxonomyMap {
 public:
  /// Returns false (and keeps the first mapping) when `label` was already
  /// mapped to a different category.
  bool insert(std::string_view label, Category category);
  std::optional<Category> find(std::string_view label) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, Category>& entries() const noexcept { return entries_; }

  /// JSON object {"label": "Category name", ...}.
  static TaxonomyMap from_json(const nlohmann::json& object);

 private:
  std::map<std::string, Category> entries_;
};

struct CorpusManifest {
  std::vector<ImageRecord> records;
  std::vector<SourceDataset> sources;
  TaxonomyMap taxonomy_map;
  std::vector<std::string> warnings;

  const ImageRecord* find(std::string_view id) const;
};

struct StatsSummary {
  std::uint64_t total_images = 0;
  std::map<Component, std::uint64_t> per_component;
  std::map<Category, std::uint64_t> per_category;
  std::uint64_t class_count = 0;

  nlohmann::json to_json() const;
};

struct CategoryAssignment {
  Category category;
  std::optional<std::string> warning;
};

/// Trim + casefold; the key used for every taxonomy lookup.
std::string normalize_label(std::string_view label);

/// Number of boxes; throws Errc::DegenerateBox(index) on a non-finite or
/// zero/negative-area box. No filtering, no suppression.
std::uint64_t derive_count(std::span<const BoundingBox> boxes);

CategoryAssignment assign_category(std::string_view class_label, const TaxonomyMap& taxonomy);

/// Parses one manifest JSONL record (category left unresolved when absent).
/// `has_category` reports whether the record carried an explicit category.
ImageRecord parse_manifest_record(const nlohmann::json& value, bool& has_category);
nlohmann::json manifest_record_to_json(const ImageRecord& record);

/// Merges manifest files. Records lacking a category are resolved through
/// `base_taxonomy` extended with the explicit categories seen in the files.
CorpusManifest ingest_manifest(std::span<const std::filesystem::path> paths,
                               const TaxonomyMap& base_taxonomy = {});

StatsSummary corpus_stats(const CorpusManifest& manifest);

/// Writes the merged manifest as JSONL ordered by id.
void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

}  // namespace agrimm::corpus
