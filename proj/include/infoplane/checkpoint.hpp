#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "infoplane/student.hpp"
#include "infoplane/teacher.hpp"

namespace infoplane {

/// Named tensors plus the configuration that produced them.
///
/// On disk: `<stem>.json` manifest {name, shapes, dtype: "f64", seed, config,
/// tensors, blob} and `<stem>.bin` holding every tensor's row-major values
/// as little-endian f64, concatenated in manifest order.
struct Checkpoint {
  std::string name;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest_path);
Checkpoint read_checkpoint(const std::filesystem::path& manifest_path);

nlohmann::ordered_json teacher_config_json(const TeacherConfig& config);
TeacherConfig teacher_config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json student_config_json(const StudentConfig& config);
StudentConfig student_config_from_json(const nlohmann::ordered_json& j);

void save_teacher(const TeacherModel& model, const TeacherConfig& config, const std::filesystem::path& path);
TeacherModel load_teacher(const std::filesystem::path& path, TeacherConfig* config_out = nullptr);
void save_student(const StudentModel& model, const StudentConfig& config, const std::filesystem::path& path);
StudentModel load_student(const std::filesystem::path& path);

}  // namespace infoplane
