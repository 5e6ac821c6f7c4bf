#include "trajadapt/kinematics.hpp"

#include <Eigen/Geometry>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trajadapt/trajectory.hpp"

namespace trajadapt {

namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, size_t byte) {
  int line = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Eigen::VectorXd vector_field(const json& j, const std::string& key, const std::string& origin) {
  if (!j.contains(key))
    throw SchemaError(origin + ": missing field '" + key + "'");
  const auto& arr = j.at(key);
  if (!arr.is_array())
    throw SchemaError(origin + ": field '" + key + "' must be an array of numbers");
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw SchemaError(origin + ": field '" + key + "[" + std::to_string(i) +
                        "]' must be a number");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

}  // namespace

RobotModel parse_robot_model(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin + ":" + std::to_string(line_of_offset(json_text, e.byte)) +
                      ": JSON parse error: " + e.what());
  }

  RobotModel model;
  if (!j.contains("name") || !j.at("name").is_string())
    throw SchemaError(origin + ": missing or non-string field 'name'");
  model.name = j.at("name").get<std::string>();

  if (!j.contains("convention") || !j.at("convention").is_string())
    throw SchemaError(origin + ": missing or non-string field 'convention'");
  const std::string conv = j.at("convention").get<std::string>();
  if (conv == "classic")
    model.convention = DHConvention::classic;
  else if (conv == "modified")
    model.convention = DHConvention::modified;
  else
    throw SchemaError(origin + ": field 'convention' must be 'classic' or 'modified', got '" +
                      conv + "'");

  if (!j.contains("links") || !j.at("links").is_array() || j.at("links").empty())
    throw SchemaError(origin + ": field 'links' must be a non-empty array");
  for (size_t i = 0; i < j.at("links").size(); ++i) {
    const auto& lj = j.at("links")[i];
    const std::string where = origin + ": links[" + std::to_string(i) + "]";
    if (!lj.is_object()) throw SchemaError(where + " must be an object");
    DHRow row;
    for (const auto& [key, target] : std::initializer_list<std::pair<const char*, double*>>{
             {"a", &row.a}, {"d", &row.d}, {"alpha", &row.alpha},
             {"theta_offset", &row.theta_offset}}) {
      if (!lj.contains(key) || !lj.at(key).is_number())
        throw SchemaError(where + ": missing or non-numeric field '" + std::string(key) + "'");
      *target = lj.at(key).get<double>();
    }
    model.joints.push_back(row);
  }

  model.lower_limits = vector_field(j, "lower_limits", origin);
  model.upper_limits = vector_field(j, "upper_limits", origin);
  const int n = model.dof();
  if (model.lower_limits.size() != n || model.upper_limits.size() != n)
    throw SchemaError(origin + ": limit vectors must have one entry per link (n=" +
                      std::to_string(n) + ")");
  for (int i = 0; i < n; ++i) {
    if (!(model.lower_limits(i) < model.upper_limits(i)))
      throw ValidationError(origin + ": joint " + std::to_string(i + 1) +
                            ": lower limit must be strictly below upper limit");
  }

  if (j.contains("base_transform")) {
    const Eigen::VectorXd flat = vector_field(j, "base_transform", origin);
    if (flat.size() != 16)
      throw SchemaError(origin + ": field 'base_transform' must hold 16 row-major numbers");
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) model.base_transform(r, c) = flat(4 * r + c);
  }
  return model;
}

RobotModel load_robot_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open robot model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_robot_model(ss.str(), path);
}

Eigen::Matrix4d fk_transform(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof())
    throw DimensionError("forward_kinematics: expected " + std::to_string(model.dof()) +
                         " joint values, got " + std::to_string(q.size()));
  std::vector<double> qv(q.data(), q.data() + q.size());
  const TMat4<double> t = chain_transform(model, qv, 0.0, 1.0);
  Eigen::Matrix4d out;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) = t(r, c);
  return out;
}

std::pair<Eigen::Vector3d, bool> euler_from_matrix(const Eigen::Matrix3d& r) {
  const double pitch = std::atan2(-r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  const bool degenerate = std::abs(M_PI_2 - std::abs(pitch)) <= 1e-9;
  Eigen::Vector3d rpy;
  if (!degenerate) {
    rpy(0) = std::atan2(r(2, 1), r(2, 2));
    rpy(1) = pitch;
    rpy(2) = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: only roll -/+ yaw is observable; tie-break yaw := 0.
    const double sgn = pitch > 0.0 ? 1.0 : -1.0;
    rpy(0) = std::atan2(sgn * r(0, 1), sgn * r(0, 2));
    rpy(1) = pitch;
    rpy(2) = 0.0;
  }
  for (int i = 0; i < 3; ++i) rpy(i) = wrap_angle(rpy(i));
  return {rpy, degenerate};
}

Eigen::Matrix3d matrix_from_euler(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy(2), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy(1), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy(0), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Pose forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q) {
  const Eigen::Matrix4d t = fk_transform(model, q);
  Pose pose;
  pose.position = t.block<3, 1>(0, 3);
  auto [rpy, degenerate] = euler_from_matrix(t.block<3, 3>(0, 0));
  pose.rpy = rpy;
  pose.degenerate = degenerate;
  return pose;
}

std::vector<Pose> fk_along_trajectory(const RobotModel& model, const DecisionVector& xi) {
  if (xi.n != model.dof())
    throw DimensionError("fk_along_trajectory: trajectory joint count " + std::to_string(xi.n) +
                         " does not match model dof " + std::to_string(model.dof()));
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(xi.m));
  for (int t = 0; t < xi.m; ++t) poses.push_back(forward_kinematics(model, xi.waypoint(t)));
  return poses;
}

}  // namespace trajadapt
