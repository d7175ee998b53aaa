#include "infoplane/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "infoplane/random.hpp"
#include "infoplane/teacher.hpp"

namespace infoplane {
namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw FormatError("'" + path.string() + "' truncated: header needs " + std::to_string(offset + 4) +
                      " bytes, file has " + std::to_string(bytes.size()));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                 static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

void check_magic(std::uint32_t got, std::uint32_t expected, const std::filesystem::path& path) {
  if (got != expected) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "observed magic 0x%08X (%u), expected 0x%08X", got, got, expected);
    throw FormatError("'" + path.string() + "': bad IDX magic number: " + buf);
  }
}

// Segments a..g of a seven-segment display.
constexpr std::array<const char*, 10> kSegments = {"abcdef", "bc",    "abdeg", "abcdg",   "bcfg",
                                                   "acdfg",  "acdefg", "abc",  "abcdefg", "abcdfg"};

}  // namespace

std::string to_string(DatasetSource source) {
  switch (source) {
    case DatasetSource::idx_file: return "idx-file";
    case DatasetSource::synthetic_digits: return "synthetic-digits";
    case DatasetSource::zero_info: return "zero-info";
    case DatasetSource::teacher_reconstructed: return "teacher-reconstructed";
    case DatasetSource::discrete_toy: return "discrete-toy";
  }
  return "synthetic-digits";
}

DatasetSource parse_dataset_source(const std::string& name) {
  for (auto s : {DatasetSource::idx_file, DatasetSource::synthetic_digits, DatasetSource::zero_info,
                 DatasetSource::teacher_reconstructed, DatasetSource::discrete_toy}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown dataset source '" + name + "'");
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(images.rows()) != labels.size()) {
    throw ContractError("dataset has " + std::to_string(images.rows()) + " images but " +
                        std::to_string(labels.size()) + " labels");
  }
  if (images.size() > 0 && (images.minCoeff() < 0.0 || images.maxCoeff() > 1.0)) {
    throw ContractError("dataset pixels outside [0, 1]");
  }
  if (!images.allFinite()) throw ContractError("dataset pixels not finite");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ContractError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.meta = meta;
  out.images.resize(static_cast<Eigen::Index>(rows.size()), images.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.images.row(static_cast<Eigen::Index>(i)) = images.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

void DiscreteJoint::validate() const {
  if (table.size() == 0) throw ContractError("joint table is empty");
  if (!table.allFinite() || table.minCoeff() < 0.0) throw ContractError("joint table has negative or non-finite entries");
  const double total = table.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    throw ContractError("joint table sums to " + std::to_string(total) + ", not 1");
  }
}

DiscreteJoint empirical_joint(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size() || x.empty()) throw DimensionError("empirical_joint: need equal, non-empty samples");
  int kx = 0, ky = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || y[i] < 0) throw ContractError("empirical_joint: negative symbol");
    kx = std::max(kx, x[i] + 1);
    ky = std::max(ky, y[i] + 1);
  }
  DiscreteJoint joint{Matrix::Zero(kx, ky)};
  for (std::size_t i = 0; i < x.size(); ++i) joint.table(x[i], y[i]) += 1.0;
  joint.table /= static_cast<double>(x.size());
  return joint;
}

LabeledDataset load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path) {
  const auto img = read_file(image_path);
  const auto lab = read_file(label_path);
  check_magic(read_be32(img, 0, image_path), kIdxImageMagic, image_path);
  check_magic(read_be32(lab, 0, label_path), kIdxLabelMagic, label_path);
  const std::uint32_t n = read_be32(img, 4, image_path);
  const std::uint32_t rows = read_be32(img, 8, image_path);
  const std::uint32_t cols = read_be32(img, 12, image_path);
  const std::uint32_t n_labels = read_be32(lab, 4, label_path);
  if (n != n_labels) {
    throw FormatError("image file holds " + std::to_string(n) + " images but label file holds " +
                      std::to_string(n_labels) + " labels");
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() != 16 + std::size_t{n} * pixels) {
    throw FormatError("'" + image_path.string() + "' has " + std::to_string(img.size()) + " bytes, expected " +
                      std::to_string(16 + std::size_t{n} * pixels));
  }
  if (lab.size() != 8 + std::size_t{n}) {
    throw FormatError("'" + label_path.string() + "' has " + std::to_string(lab.size()) + " bytes, expected " +
                      std::to_string(8 + std::size_t{n}));
  }
  LabeledDataset data;
  data.meta = {DatasetSource::idx_file, static_cast<int>(rows), 0};
  data.images.resize(n, static_cast<Eigen::Index>(pixels));
  data.labels.resize(n);
  int max_label = 9;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < pixels; ++j) {
      data.images(i, static_cast<Eigen::Index>(j)) = img[16 + i * pixels + j] / 255.0;
    }
    data.labels[i] = lab[8 + i];
    max_label = std::max(max_label, data.labels[i]);
  }
  data.num_classes = max_label + 1;
  return data;
}

void write_idx(const LabeledDataset& data, const std::filesystem::path& image_path,
               const std::filesystem::path& label_path) {
  data.validate();
  const auto side = static_cast<std::uint32_t>(data.meta.side);
  std::uint32_t rows = side, cols = side;
  if (std::int64_t{rows} * cols != data.dim()) {
    rows = 1;
    cols = static_cast<std::uint32_t>(data.dim());
  }
  std::ofstream img(image_path, std::ios::binary);
  std::ofstream lab(label_path, std::ios::binary);
  if (!img || !lab) throw FormatError("cannot write IDX files at '" + image_path.string() + "'");
  const auto n = static_cast<std::uint32_t>(data.size());
  write_be32(img, kIdxImageMagic);
  write_be32(img, n);
  write_be32(img, rows);
  write_be32(img, cols);
  std::vector<char> buf(static_cast<std::size_t>(data.dim()));
  for (Eigen::Index i = 0; i < data.images.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      buf[static_cast<std::size_t>(j)] = static_cast<char>(static_cast<unsigned char>(std::lround(data.images(i, j) * 255.0)));
    }
    img.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  write_be32(lab, kIdxLabelMagic);
  write_be32(lab, n);
  for (int y : data.labels) lab.put(static_cast<char>(y));
}

void export_dataset(const LabeledDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_idx(data, dir / "images.idx", dir / "labels.idx");
  nlohmann::ordered_json sidecar;
  sidecar["source"] = to_string(data.meta.source);
  sidecar["seed"] = data.meta.seed;
  sidecar["side"] = data.meta.side;
  sidecar["count"] = data.size();
  sidecar["num_classes"] = data.num_classes;
  std::ofstream(dir / "dataset.json") << sidecar.dump(2) << '\n';
}

LabeledDataset downsample(const LabeledDataset& data, int factor) {
  const int side = data.meta.side;
  if (factor < 1 || side % factor != 0 || side * side != data.dim()) {
    throw ConfigError("downsample: side " + std::to_string(side) + " not divisible by " + std::to_string(factor));
  }
  const int out_side = side / factor;
  LabeledDataset out = data;
  out.meta.side = out_side;
  out.images.resize(data.images.rows(), out_side * out_side);
  const double inv = 1.0 / (factor * factor);
  for (Eigen::Index n = 0; n < data.images.rows(); ++n) {
    for (int r = 0; r < out_side; ++r) {
      for (int c = 0; c < out_side; ++c) {
        double acc = 0.0;
        for (int dr = 0; dr < factor; ++dr)
          for (int dc = 0; dc < factor; ++dc) acc += data.images(n, (r * factor + dr) * side + c * factor + dc);
        out.images(n, r * out_side + c) = acc * inv;
      }
    }
  }
  return out;
}

Matrix digit_template(int digit, int side) {
  if (digit < 0 || digit > 9) throw ContractError("digit_template: digit must be 0..9");
  if (side < 8) throw ContractError("digit_template: side must be at least 8");
  Matrix img = Matrix::Zero(side, side);
  const int left = static_cast<int>(std::lround(side * 0.2));
  const int right = side - 1 - left;
  const int top = std::max(1, static_cast<int>(std::lround(side * 0.1)));
  const int bottom = side - 1 - top;
  const int middle = (top + bottom) / 2;
  const int thick = std::max(1, side / 8);
  auto hline = [&](int row) {
    for (int t = 0; t < thick; ++t)
      for (int c = left; c <= right; ++c) img(std::min(side - 1, row + t), c) = 1.0;
  };
  auto vline = [&](int col, int r0, int r1) {
    for (int t = 0; t < thick; ++t)
      for (int r = r0; r <= r1; ++r) img(r, std::clamp(col + (col == left ? t : -t), 0, side - 1)) = 1.0;
  };
  for (const char* s = kSegments[static_cast<std::size_t>(digit)]; *s; ++s) {
    switch (*s) {
      case 'a': hline(top); break;
      case 'b': vline(right, top, middle); break;
      case 'c': vline(right, middle, bottom); break;
      case 'd': hline(bottom - thick + 1); break;
      case 'e': vline(left, middle, bottom); break;
      case 'f': vline(left, top, middle); break;
      case 'g': hline(middle); break;
    }
  }
  return img;
}

LabeledDataset make_synthetic_digits(int per_class, int side, double noise_level, std::uint64_t seed) {
  if (per_class < 0) throw ContractError("make_synthetic_digits: per_class must be non-negative");
  std::vector<RowVector> templates;
  for (int d = 0; d < 10; ++d) {
    const Matrix t = digit_template(d, side);
    RowVector flat(side * side);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) flat(r * side + c) = t(r, c);
    templates.push_back(flat);
  }
  LabeledDataset data;
  data.meta = {DatasetSource::synthetic_digits, side, seed};
  const Eigen::Index n = static_cast<Eigen::Index>(per_class) * 10;
  data.images.resize(n, side * side);
  data.labels.resize(static_cast<std::size_t>(n));
  RandomStream rng(seed, "synthetic-digits");
  Eigen::Index row = 0;
  for (int k = 0; k < per_class; ++k) {
    for (int d = 0; d < 10; ++d, ++row) {
      for (Eigen::Index j = 0; j < side * side; ++j) {
        const double u = 2.0 * rng.uniform() - 1.0;
        data.images(row, j) = std::clamp(templates[static_cast<std::size_t>(d)](j) + noise_level * u, 0.0, 1.0);
      }
      data.labels[static_cast<std::size_t>(row)] = d;
    }
  }
  return data;
}

LabeledDataset make_zero_info(const LabeledDataset& base, std::uint64_t seed) {
  if (base.size() == 0) throw ContractError("make_zero_info: base dataset is empty");
  LabeledDataset out = base;
  out.meta.source = DatasetSource::zero_info;
  out.meta.seed = seed;
  RandomStream rng(seed, "zero-info-labels");
  for (int& y : out.labels) y = static_cast<int>(rng.below(static_cast<std::size_t>(base.num_classes)));
  return out;
}

LabeledDataset teacher_relabel(const TeacherModel& teacher, const LabeledDataset& base, std::uint64_t seed) {
  if (base.dim() != teacher.input_dim()) {
    throw DimensionError("teacher_relabel: images have " + std::to_string(base.dim()) +
                         " pixels, teacher expects " + std::to_string(teacher.input_dim()));
  }
  LabeledDataset out = base;
  out.images = teacher.reconstruct(base.images).cwiseMax(0.0).cwiseMin(1.0);
  out.meta.source = DatasetSource::teacher_reconstructed;
  out.meta.seed = seed;
  return out;
}

DiscreteSamples sample_discrete(const DiscreteJoint& joint, std::size_t n, std::uint64_t seed) {
  joint.validate();
  const Eigen::Index cols = joint.table.cols();
  std::vector<double> cdf;
  cdf.reserve(static_cast<std::size_t>(joint.table.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < joint.table.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) cdf.push_back(acc += joint.table(i, j));
  DiscreteSamples out;
  out.x.reserve(n);
  out.y.reserve(n);
  RandomStream rng(seed, "discrete-joint");
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto cell = static_cast<Eigen::Index>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    out.x.push_back(static_cast<int>(cell / cols));
    out.y.push_back(static_cast<int>(cell % cols));
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, std::size_t eval_count,
                                                std::uint64_t seed) {
  if (eval_count >= data.size()) throw ConfigError("split: eval count must be smaller than the dataset");
  RandomStream rng(seed, "split");
  const auto perm = rng.permutation(data.size());
  std::vector<std::size_t> eval_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(eval_count));
  std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(eval_count), perm.end());
  std::sort(eval_rows.begin(), eval_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {data.subset(train_rows), data.subset(eval_rows)};
}

}  // namespace infoplane
