#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "treglab/errors.hpp"
#include "treglab/tokenizer.hpp"

namespace treglab {

// ISO 639-1 codes of the task languages. The first six carry human
// training/dev data; all ten have synthetic sets.
extern const std::vector<std::string> kAllLanguages;
extern const std::vector<std::string> kTrainingLanguages;
bool is_known_language(const std::string& code);
bool is_training_language(const std::string& code);
std::string language_display_name(const std::string& code);  // "nl" -> "Dutch"

enum class Origin { human, synthetic };
std::string origin_name(Origin o);
Origin parse_origin(const std::string& s);

constexpr double kScoreMin = 1.0;
constexpr double kScoreMax = 5.0;

struct LabeledText {
  std::string id;
  std::string text;
  std::string language;
  double score = 0.0;
  Origin origin = Origin::human;
};

struct Dataset {
  std::vector<LabeledText> items;
  std::string name;
  std::string provenance;

  size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  int count_language(const std::string& lang) const;
  std::vector<std::string> languages() const;  // distinct, in first-seen order
  // Throws ValidationError on duplicate ids, bad scores or unknown languages.
  void validate() const;
};

// CSV schema: header `id,text,language,score,origin`, UTF-8, quoted fields.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

std::pair<Dataset, Dataset> split(const Dataset& ds, double dev_fraction, uint64_t seed);

Dataset few_shot_sample(const Dataset& ds, const std::string& language, int k, uint64_t seed);

Dataset omit_language(const Dataset& ds, const std::string& language);

// One row of the 15-setting training-data compilation matrix.
struct CompilationConfig {
  int id = 0;
  double es_fraction = 1.0;
  double it_fraction = 1.0;
  double base_fraction = 1.0;            // en, zh, pt, fr
  std::vector<std::string> synth_langs;  // subset of {nl, hi, ko, ar}
  std::string category;                  // SFewS | SynthKoHi | ZeroS
  uint64_t seed = 0;

  double fraction_for(const std::string& lang) const;
  void validate() const;

  nlohmann::json to_json() const;
  static CompilationConfig from_json(const nlohmann::json& j);
};

// The full 15-row matrix with per-row seed = id.
std::vector<CompilationConfig> compilation_matrix();
// Canonical serialization, byte-compared against the checked-in golden file.
std::string compilation_matrix_json();
CompilationConfig compilation_by_id(int id);

// Members of the matrix that go into the reference submission ensemble.
extern const std::vector<int> kSubmissionHefitRows;
extern const std::vector<int> kSubmissionSfitRows;

Dataset compile_training_set(const CompilationConfig& config,
                             const std::map<std::string, Dataset>& human_sets,
                             const std::map<std::string, Dataset>& synth_sets);

// Per-language dataset files named `<prefix>_<lang>.csv` under a directory.
std::map<std::string, Dataset> load_language_sets(const std::filesystem::path& dir,
                                                  const std::string& prefix,
                                                  const std::vector<std::string>& languages);
Dataset merge_sets(const std::map<std::string, Dataset>& sets, const std::string& name);

}  // namespace treglab
