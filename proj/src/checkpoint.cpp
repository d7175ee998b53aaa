#include "infoplane/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace infoplane {
namespace {

void put_f64_le(std::ofstream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

double get_f64_le(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

std::vector<std::string> mlp_names(const std::string& prefix, const Mlp& mlp) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < mlp.layers().size(); ++i) {
    names.push_back(prefix + ".layer" + std::to_string(i) + ".weight");
    names.push_back(prefix + ".layer" + std::to_string(i) + ".bias");
  }
  return names;
}

void add_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp& mlp) {
  const auto names = mlp_names(prefix, mlp);
  const auto params = mlp.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.emplace_back(names[i], *params[i]);
}

void restore_mlp(const Checkpoint& ckpt, std::size_t& cursor, Mlp& mlp) {
  for (Matrix* p : mlp.parameters()) {
    if (cursor >= ckpt.tensors.size()) throw FormatError("checkpoint '" + ckpt.name + "' has too few tensors");
    const Matrix& src = ckpt.tensors[cursor++].second;
    if (src.rows() != p->rows() || src.cols() != p->cols()) {
      throw FormatError("checkpoint tensor '" + ckpt.tensors[cursor - 1].first + "' has shape " +
                        shape_string(src) + ", model expects " + shape_string(*p));
    }
    *p = src;
  }
}

std::vector<Eigen::Index> sizes_from_json(const nlohmann::ordered_json& j) {
  return j.get<std::vector<Eigen::Index>>();
}

OptimizerConfig optimizer_from_json(const nlohmann::ordered_json& j) {
  OptimizerConfig o;
  o.kind = parse_optimizer_kind(j.value("kind", std::string("adam")));
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.beta1 = j.value("beta1", o.beta1);
  o.beta2 = j.value("beta2", o.beta2);
  o.epsilon = j.value("epsilon", o.epsilon);
  return o;
}

nlohmann::ordered_json optimizer_json(const OptimizerConfig& o) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(o.kind);
  j["learning_rate"] = o.learning_rate;
  j["beta1"] = o.beta1;
  j["beta2"] = o.beta2;
  j["epsilon"] = o.epsilon;
  return j;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest_path) {
  std::filesystem::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");
  nlohmann::ordered_json manifest;
  manifest["name"] = ckpt.name;
  manifest["dtype"] = "f64";
  manifest["seed"] = ckpt.seed;
  manifest["config"] = ckpt.config;
  auto& names = manifest["tensors"] = nlohmann::ordered_json::array();
  auto& shapes = manifest["shapes"] = nlohmann::ordered_json::array();
  for (const auto& [name, m] : ckpt.tensors) {
    names.push_back(name);
    shapes.push_back({m.rows(), m.cols()});
  }
  manifest["blob"] = blob_path.filename().string();
  if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw FormatError("cannot write '" + blob_path.string() + "'");
  for (const auto& entry : ckpt.tensors) {
    const Matrix& m = entry.second;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64_le(blob, m(r, c));
  }
  std::ofstream(manifest_path) << manifest.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open checkpoint '" + manifest_path.string() + "'");
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint manifest '" + manifest_path.string() + "': " + e.what());
  }
  if (manifest.value("dtype", std::string()) != "f64") throw FormatError("checkpoint dtype must be f64");
  Checkpoint ckpt;
  ckpt.name = manifest.at("name").get<std::string>();
  ckpt.seed = manifest.at("seed").get<std::uint64_t>();
  ckpt.config = manifest.at("config");
  const auto blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw FormatError("cannot open checkpoint blob '" + blob_path.string() + "'");
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(blob), std::istreambuf_iterator<char>()};
  const auto& names = manifest.at("tensors");
  const auto& shapes = manifest.at("shapes");
  if (names.size() != shapes.size()) throw FormatError("checkpoint tensors and shapes differ in length");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto rows = shapes[i].at(0).get<Eigen::Index>();
    const auto cols = shapes[i].at(1).get<Eigen::Index>();
    const std::size_t need = static_cast<std::size_t>(rows * cols) * 8;
    if (offset + need > bytes.size()) {
      throw FormatError("checkpoint blob '" + blob_path.string() + "' truncated at tensor " +
                        names[i].get<std::string>());
    }
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, offset += 8) m(r, c) = get_f64_le(bytes.data() + offset);
    ckpt.tensors.emplace_back(names[i].get<std::string>(), std::move(m));
  }
  if (offset != bytes.size()) throw FormatError("checkpoint blob '" + blob_path.string() + "' has trailing bytes");
  return ckpt;
}

nlohmann::ordered_json teacher_config_json(const TeacherConfig& c) {
  nlohmann::ordered_json j;
  j["latent_dim"] = c.latent_dim;
  j["hidden"] = c.hidden;
  j["activation"] = to_string(c.activation);
  j["observation"] = to_string(c.observation);
  j["sigma2"] = c.sigma2;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["optimizer"] = optimizer_json(c.optimizer);
  return j;
}

TeacherConfig teacher_config_from_json(const nlohmann::ordered_json& j) {
  TeacherConfig c;
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  if (j.contains("hidden")) c.hidden = sizes_from_json(j.at("hidden"));
  c.activation = parse_activation(j.value("activation", to_string(c.activation)));
  c.observation = parse_observation_model(j.value("observation", to_string(c.observation)));
  c.sigma2 = j.value("sigma2", c.sigma2);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
  return c;
}

nlohmann::ordered_json student_config_json(const StudentConfig& c) {
  nlohmann::ordered_json j;
  j["bottleneck_dim"] = c.bottleneck_dim;
  j["encoder_hidden"] = c.encoder_hidden;
  j["decoder_hidden"] = c.decoder_hidden;
  j["activation"] = to_string(c.activation);
  j["num_classes"] = c.num_classes;
  j["beta"] = c.beta;
  j["optimizer"] = optimizer_json(c.optimizer);
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["init_gain"] = c.init_gain;
  return j;
}

StudentConfig student_config_from_json(const nlohmann::ordered_json& j) {
  StudentConfig c;
  c.bottleneck_dim = j.value("bottleneck_dim", c.bottleneck_dim);
  if (j.contains("encoder_hidden")) c.encoder_hidden = sizes_from_json(j.at("encoder_hidden"));
  if (j.contains("decoder_hidden")) c.decoder_hidden = sizes_from_json(j.at("decoder_hidden"));
  c.activation = parse_activation(j.value("activation", to_string(c.activation)));
  c.num_classes = j.value("num_classes", c.num_classes);
  c.beta = j.value("beta", c.beta);
  if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.init_gain = j.value("init_gain", c.init_gain);
  return c;
}

void save_teacher(const TeacherModel& model, const TeacherConfig& config, const std::filesystem::path& path) {
  Checkpoint ckpt{"teacher", config.seed, teacher_config_json(config), {}};
  ckpt.config["input_dim"] = model.input_dim();
  add_mlp(ckpt, "encoder", model.encoder);
  add_mlp(ckpt, "decoder", model.decoder);
  write_checkpoint(ckpt, path);
}

TeacherModel load_teacher(const std::filesystem::path& path, TeacherConfig* config_out) {
  const Checkpoint ckpt = read_checkpoint(path);
  TeacherConfig config = teacher_config_from_json(ckpt.config);
  config.seed = ckpt.seed;
  TeacherModel model(config, ckpt.config.at("input_dim").get<Eigen::Index>());
  std::size_t cursor = 0;
  restore_mlp(ckpt, cursor, model.encoder);
  restore_mlp(ckpt, cursor, model.decoder);
  if (config_out != nullptr) *config_out = config;
  return model;
}

void save_student(const StudentModel& model, const StudentConfig& config, const std::filesystem::path& path) {
  StudentConfig c = config;
  c.beta = model.beta;
  Checkpoint ckpt{"student", config.seed, student_config_json(c), {}};
  ckpt.config["input_dim"] = model.input_dim();
  add_mlp(ckpt, "encoder", model.encoder);
  add_mlp(ckpt, "decoder", model.decoder);
  ckpt.tensors.emplace_back("marginal.mean", Matrix(model.marginal.mean.transpose()));
  ckpt.tensors.emplace_back("marginal.log_var", Matrix(model.marginal.log_var.transpose()));
  write_checkpoint(ckpt, path);
}

StudentModel load_student(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  StudentConfig config = student_config_from_json(ckpt.config);
  config.seed = ckpt.seed;
  StudentModel model(config, ckpt.config.at("input_dim").get<Eigen::Index>());
  std::size_t cursor = 0;
  restore_mlp(ckpt, cursor, model.encoder);
  restore_mlp(ckpt, cursor, model.decoder);
  if (cursor + 2 != ckpt.tensors.size()) throw FormatError("student checkpoint missing marginal tensors");
  model.marginal = DiagGaussiand(ckpt.tensors[cursor].second.row(0).transpose(),
                                 ckpt.tensors[cursor + 1].second.row(0).transpose());
  return model;
}

}  // namespace infoplane
