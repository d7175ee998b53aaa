#pragma once

#include <filesystem>

#include "infoplane/config.hpp"
#include "infoplane/mi.hpp"
#include "infoplane/student.hpp"
#include "infoplane/teacher.hpp"

namespace fixture {

using infoplane::Matrix;

// Scalar linear-Gaussian world: z_v ~ N(0,1), x = w z_v + N(0, s2) with
// w = sqrt(1 - s2) so var(x) = 1, and the student z = a x + N(0, sigma2).

/// Teacher with the generative model above and its exact posterior as encoder.
infoplane::TeacherModel linear_teacher(double s2);
/// Linear student with mean weight `a` and constant log-variance ln(sigma2).
infoplane::StudentModel linear_student(double a, double sigma2);
/// Linear inference net, optionally set to the exact posterior p(z_v | z).
infoplane::InferenceNet linear_inference(std::uint64_t seed);
void set_exact_posterior(infoplane::InferenceNet& net, double a, double sigma2, double s2);

/// 0.5 ln(1 + a^2 var_x / sigma2)
double linear_mi(double a, double sigma2, double var_x = 1.0);
/// log N(z; 0, a^2 + sigma2)
double linear_log_marginal(double z, double a, double sigma2);
/// x ~ N(0, 1) rescaled to exact zero mean and unit second moment.
infoplane::LabeledDataset standard_gaussian_inputs(Eigen::Index n, std::uint64_t seed);

/// Small, fast run configuration writing into `dir`.
infoplane::RunConfig tiny_run(const std::filesystem::path& dir);

/// Fresh empty directory under the system temp directory.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace fixture
