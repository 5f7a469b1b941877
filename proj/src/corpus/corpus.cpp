#include "agrimm/corpus/corpus.hpp"

#include "agrimm/common/error.hpp"
#include "agrimm/common/jsonl.hpp"
#include "agrimm/common/unicode.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace agrimm::corpus {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Cereals & Grasses",  "Legumes/Pulses",     "Fruits",
    "Vegetables & Tubers", "Industrial",        "Medicinal & Spices",
    "Forestry & Timber",  "Weeds/Wild",         "Ornamental/Other",
};

// lowercase ASCII alphanumerics only
std::string squash(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

const std::string* optional_string(const json& value, const char* key) {
  auto it = value.find(key);
  if (it == value.end() || it->is_null()) return nullptr;
  if (!it->is_string()) {
    throw Error(Errc::ParseError, key, "expected a string");
  }
  return it->get_ptr<const std::string*>();
}

std::string required_string(const json& value, const char* key) {
  const std::string* s = optional_string(value, key);
  if (s == nullptr || s->empty()) throw Error(Errc::ParseError, key, "missing required field");
  return *s;
}

}  // namespace

std::string_view to_string(Component c) {
  switch (c) {
    case Component::FineGrained: return "FineGrained";
    case Component::Disease: return "Disease";
    case Component::Counting: return "Counting";
  }
  return "FineGrained";
}

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::string_view to_string(SplitTag s) {
  switch (s) {
    case SplitTag::Train: return "Train";
    case SplitTag::Test: return "Test";
    case SplitTag::Unassigned: return "Unassigned";
  }
  return "Unassigned";
}

Component parse_component(std::string_view text) {
  const std::string key = squash(text);
  if (key == "finegrained") return Component::FineGrained;
  if (key == "disease") return Component::Disease;
  if (key == "counting") return Component::Counting;
  throw Error(Errc::UnknownComponent, std::string(text));
}

std::optional<Category> parse_category(std::string_view text) {
  const std::string key = squash(text);
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (squash(kCategoryNames[i]) == key) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string normalize_label(std::string_view label) { return casefold_utf8(trim_utf8(label)); }

bool TaxonomyMap::insert(std::string_view label, Category category) {
  auto [it, inserted] = entries_.emplace(normalize_label(label), category);
  return inserted || it->second == category;
}

std::optional<Category> TaxonomyMap::find(std::string_view label) const {
  auto it = entries_.find(normalize_label(label));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

TaxonomyMap TaxonomyMap::from_json(const json& object) {
  if (!object.is_object()) throw Error(Errc::ParseError, "taxonomy", "expected a JSON object");
  TaxonomyMap map;
  for (const auto& [label, value] : object.items()) {
    if (!value.is_string()) throw Error(Errc::ParseError, label, "category must be a string");
    auto category = parse_category(value.get<std::string>());
    if (!category) throw Error(Errc::ParseError, label, "unknown category " + value.dump());
    map.insert(label, *category);
  }
  return map;
}

const ImageRecord* CorpusManifest::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

json StatsSummary::to_json() const {
  json components = json::object();
  for (auto c : {Component::FineGrained, Component::Disease, Component::Counting}) {
    auto it = per_component.find(c);
    components[std::string(agrimm::corpus::to_string(c))] = it == per_component.end() ? 0 : it->second;
  }
  json categories = json::object();
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    auto c = static_cast<Category>(i);
    auto it = per_category.find(c);
    categories[std::string(agrimm::corpus::to_string(c))] = it == per_category.end() ? 0 : it->second;
  }
  return json{{"total_images", total_images},
              {"per_component", components},
              {"per_category", categories},
              {"class_count", class_count}};
}

std::uint64_t derive_count(std::span<const BoundingBox> boxes) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const bool finite = std::isfinite(b.x_min) && std::isfinite(b.y_min) &&
                        std::isfinite(b.x_max) && std::isfinite(b.y_max);
    if (!finite || !(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
      throw Error(Errc::DegenerateBox, std::to_string(i));
    }
  }
  return boxes.size();
}

CategoryAssignment assign_category(std::string_view class_label, const TaxonomyMap& taxonomy) {
  if (auto found = taxonomy.find(class_label)) return {*found, std::nullopt};
  return {Category::OrnamentalOther,
          "unmapped class label '" + std::string(class_label) + "' assigned to Ornamental/Other"};
}

ImageRecord parse_manifest_record(const json& value, bool& has_category) {
  if (!value.is_object()) throw Error(Errc::ParseError, "record", "expected a JSON object");
  ImageRecord r;
  r.id = required_string(value, "id");
  r.source_dataset = required_string(value, "source_dataset");
  r.image_path = required_string(value, "image_path");
  r.class_label = required_string(value, "class_label");
  r.component = parse_component(required_string(value, "component"));

  has_category = false;
  if (const std::string* cat = optional_string(value, "category")) {
    auto parsed = parse_category(*cat);
    if (!parsed) throw Error(Errc::ParseError, "category", "not one of the nine categories: " + *cat);
    r.category = *parsed;
    has_category = true;
  }

  auto ann = value.find("annotations");
  const bool has_annotations = ann != value.end() && !ann->is_null();
  auto count_field = value.find("annotation_count");
  if (r.component == Component::Counting && !has_annotations && count_field != value.end() &&
      !count_field->is_null()) {
    // merged manifests carry the derived count instead of the raw boxes
    if (!count_field->is_number_unsigned()) {
      throw Error(Errc::ParseError, "annotation_count", "expected a non-negative integer");
    }
    r.annotation_count = count_field->get<std::uint64_t>();
  } else if (r.component == Component::Counting) {
    if (!has_annotations || !ann->is_array()) {
      throw Error(Errc::ParseError, "annotations", "Counting records require an annotations array");
    }
    std::vector<BoundingBox> boxes;
    boxes.reserve(ann->size());
    for (const auto& box : *ann) {
      if (!box.is_array() || box.size() != 4 ||
          !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); })) {
        throw Error(Errc::ParseError, "annotations", "each box must be [x0,y0,x1,y1]");
      }
      boxes.push_back({box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                       box[3].get<double>()});
    }
    r.annotation_count = derive_count(boxes);
  } else if (has_annotations || (count_field != value.end() && !count_field->is_null())) {
    throw Error(Errc::ParseError, "annotations", "annotations only allowed on Counting records");
  }
  return r;
}

json manifest_record_to_json(const ImageRecord& record) {
  json out{{"id", record.id},
           {"source_dataset", record.source_dataset},
           {"image_path", record.image_path},
           {"class_label", record.class_label},
           {"component", to_string(record.component)},
           {"category", to_string(record.category)}};
  if (record.annotation_count) out["annotation_count"] = *record.annotation_count;
  return out;
}

CorpusManifest ingest_manifest(std::span<const std::filesystem::path> paths,
                               const TaxonomyMap& base_taxonomy) {
  CorpusManifest manifest;
  manifest.taxonomy_map = base_taxonomy;
  std::vector<bool> explicit_category;
  std::unordered_set<std::string> ids;

  for (const auto& path : paths) {
    for_each_jsonl(path, [&](const json& value, std::size_t line_no) {
      bool has_category = false;
      ImageRecord record;
      try {
        record = parse_manifest_record(value, has_category);
      } catch (const Error& e) {
        if (e.code() != Errc::ParseError) throw;
        throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no), e.what());
      }
      if (!ids.insert(record.id).second) throw Error(Errc::DuplicateId, record.id);
      if (has_category && !manifest.taxonomy_map.insert(record.class_label, record.category)) {
        manifest.warnings.push_back("conflicting category for '" + record.class_label +
                                    "' at " + path.string() + ":" + std::to_string(line_no) +
                                    "; keeping first mapping");
      }
      explicit_category.push_back(has_category);
      manifest.records.push_back(std::move(record));
    });
  }

  std::set<std::string> warned;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    auto& r = manifest.records[i];
    if (explicit_category[i]) continue;
    auto assignment = assign_category(r.class_label, manifest.taxonomy_map);
    r.category = assignment.category;
    if (assignment.warning && warned.insert(normalize_label(r.class_label)).second) {
      manifest.warnings.push_back(*assignment.warning);
    }
  }
  // the fallback keeps every label resolvable through the map
  for (const auto& r : manifest.records) {
    if (!manifest.taxonomy_map.find(r.class_label)) {
      manifest.taxonomy_map.insert(r.class_label, r.category);
    }
  }

  std::unordered_map<std::string, std::size_t> source_index;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    auto [it, inserted] = source_index.emplace(r.source_dataset, manifest.sources.size());
    if (inserted) manifest.sources.push_back({r.source_dataset, r.component, {}});
    auto& source = manifest.sources[it->second];
    if (source.component != r.component) {
      throw Error(Errc::ParseError, r.id,
                  "source '" + r.source_dataset + "' mixes components " +
                      std::string(to_string(source.component)) + " and " +
                      std::string(to_string(r.component)));
    }
    source.records.push_back(i);
  }
  return manifest;
}

StatsSummary corpus_stats(const CorpusManifest& manifest) {
  StatsSummary stats;
  std::unordered_set<std::string_view> labels;
  for (const auto& r : manifest.records) {
    ++stats.total_images;
    ++stats.per_component[r.component];
    ++stats.per_category[r.category];
    labels.insert(r.class_label);
  }
  stats.class_count = labels.size();
  return stats;
}

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::vector<const ImageRecord*> ordered;
  ordered.reserve(manifest.records.size());
  for (const auto& r : manifest.records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const ImageRecord* a, const ImageRecord* b) { return a->id < b->id; });
  std::string out;
  for (const auto* r : ordered) {
    out += to_jsonl_line(manifest_record_to_json(*r));
    out += '\n';
  }
  write_text_file_atomic(path, out);
}

}  // namespace agrimm::corpus
