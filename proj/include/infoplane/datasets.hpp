#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infoplane/types.hpp"

namespace infoplane {

class TeacherModel;

enum class DatasetSource { idx_file, synthetic_digits, zero_info, teacher_reconstructed, discrete_toy };

std::string to_string(DatasetSource source);
DatasetSource parse_dataset_source(const std::string& name);

struct DatasetMeta {
  DatasetSource source = DatasetSource::synthetic_digits;
  int side = 0;
  std::uint64_t seed = 0;
};

/// Images (one per row, pixels in [0, 1]) with integer class labels.
struct LabeledDataset {
  Matrix images;
  std::vector<int> labels;
  int num_classes = 10;
  DatasetMeta meta;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dim() const { return images.cols(); }

  /// Throws ContractError naming the first violated invariant.
  void validate() const;
  LabeledDataset subset(std::span<const std::size_t> rows) const;
};

/// Joint probability table p(x, y), rows indexed by x.
struct DiscreteJoint {
  Matrix table;

  void validate() const;
  Vector marginal_x() const { return table.rowwise().sum(); }
  RowVector marginal_y() const { return table.colwise().sum(); }
};

struct DiscreteSamples {
  std::vector<int> x;
  std::vector<int> y;
};

/// Empirical joint frequencies of paired symbols.
DiscreteJoint empirical_joint(std::span<const int> x, std::span<const int> y);

// IDX files, big-endian.
inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

LabeledDataset load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path);
/// Pixels are written as round(255 * p).
void write_idx(const LabeledDataset& data, const std::filesystem::path& image_path,
               const std::filesystem::path& label_path);
/// images.idx, labels.idx and dataset.json (source, seed, side, count) into `dir`.
void export_dataset(const LabeledDataset& data, const std::filesystem::path& dir);

/// Block-average pooling of square images by an integer factor.
LabeledDataset downsample(const LabeledDataset& data, int factor);

/// Seven-segment style template for `digit` at side x side, values in {0, 1}.
Matrix digit_template(int digit, int side);

LabeledDataset make_synthetic_digits(int per_class, int side, double noise_level, std::uint64_t seed);

/// Same images with labels drawn uniformly, independent of content.
LabeledDataset make_zero_info(const LabeledDataset& base, std::uint64_t seed);

/// Images replaced by the teacher's deterministic reconstruction; labels kept.
LabeledDataset teacher_relabel(const TeacherModel& teacher, const LabeledDataset& base, std::uint64_t seed);

DiscreteSamples sample_discrete(const DiscreteJoint& joint, std::size_t n, std::uint64_t seed);

/// Seeded split into (train, eval); eval gets `eval_count` rows.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, std::size_t eval_count,
                                                std::uint64_t seed);

}  // namespace infoplane
