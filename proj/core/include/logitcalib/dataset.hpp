#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logitcalib {

enum class Split { kTrain, kValidation, kTest, kUnseen };

std::string_view to_string(Split split);
// Throws a data error for unknown names.
Split parse_split(std::string_view name);

enum class DatasetFormat { kJsonl, kCsv };

DatasetFormat parse_format(std::string_view name);
// Chooses CSV for a ".csv" extension and JSONL otherwise.
DatasetFormat format_from_path(const std::filesystem::path& path);

/// Ordered class names. The index of a name is the logit dimension that
/// scores that class.
class ClassRegistry {
 public:
  ClassRegistry() = default;
  // Throws if fewer than two names are given or names repeat or are empty.
  explicit ClassRegistry(std::vector<std::string> names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;

 private:
  std::vector<std::string> names_;
};

struct LogitRecord {
  std::vector<double> logits;
  std::optional<std::size_t> label;
  Split split = Split::kTrain;
  // Free-form group name for unseen records; never used for fitting.
  std::optional<std::string> tag;

  friend bool operator==(const LogitRecord&, const LogitRecord&) = default;
};

/// A validated collection of logit records sharing one class registry.
struct SplitDataset {
  ClassRegistry registry;
  std::vector<LogitRecord> records;

  std::size_t num_classes() const noexcept { return registry.size(); }

  // Records belonging to `split`, in file order.
  std::vector<LogitRecord> select(Split split) const;
  std::size_t count(Split split) const;
  // Per-class label counts over one split.
  std::vector<std::size_t> class_counts(Split split) const;

  friend bool operator==(const SplitDataset&, const SplitDataset&) = default;
};

// Checks every record invariant: vector length K, finite logits, labels in
// range, labels present exactly for non-unseen splits. Throws a data error
// naming the offending record.
void validate(const SplitDataset& data);

// Checks that the train split holds at least `min_per_class` records of
// every class.
void require_train_coverage(const SplitDataset& data,
                            std::size_t min_per_class = 1);

// Class names live in a sidecar file next to the dataset,
// "<dataset path>.classes.json" = {"classes": [names...]}, since neither the
// JSONL nor the CSV layout carries the class order. Passing `registry`
// overrides the sidecar.
std::filesystem::path registry_path_for(const std::filesystem::path& dataset);

SplitDataset load_dataset(const std::filesystem::path& path,
                          DatasetFormat format,
                          const std::optional<ClassRegistry>& registry = {});
SplitDataset parse_jsonl(std::string_view text, const ClassRegistry& registry);
SplitDataset parse_csv(std::string_view text, const ClassRegistry& registry);

// Writes the dataset and its registry sidecar.
void save_dataset(const SplitDataset& data, const std::filesystem::path& path,
                  DatasetFormat format);
std::string to_jsonl(const SplitDataset& data);
std::string to_csv(const SplitDataset& data);

ClassRegistry load_registry(const std::filesystem::path& path);
void save_registry(const ClassRegistry& registry,
                   const std::filesystem::path& path);

// Reads a whole file; throws an I/O error on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace logitcalib
