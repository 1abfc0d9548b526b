#include "cinempc/scenario.hpp"

#include "json_locator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace cinempc {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ScenarioError::ScenarioError(std::string path, int line, const std::string& message)
    : std::runtime_error((path.empty() ? std::string("/") : path) + (line > 0 ? " (line " + std::to_string(line) + ")" : "") +
                         ": " + message),
      path_(std::move(path)),
      line_(line) {}

int Scenario::active_sequence(double t) const {
  int idx = 0;
  for (int i = 0; i < static_cast<int>(sequences.size()); ++i) {
    if (sequences[i].start <= t) idx = i;
  }
  return idx;
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double mm_to_m(double mm) { return mm / 1000.0; }
double deg_to_rad(double deg) { return deg * kDegToRad; }

// File-unit value that converts back to exactly `si`.
template <typename Forward>
double invert_exactly(double si, double guess, Forward forward) {
  if (forward(guess) == si) return guess;
  double up = guess;
  double down = guess;
  for (int i = 0; i < 256; ++i) {
    up = std::nextafter(up, INFINITY);
    down = std::nextafter(down, -INFINITY);
    if (forward(up) == si) return up;
    if (forward(down) == si) return down;
  }
  return guess;
}

double m_to_mm(double m) { return invert_exactly(m, m * 1000.0, mm_to_m); }
double rad_to_deg(double rad) { return invert_exactly(rad, rad * kRadToDeg, deg_to_rad); }

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Scenario parse() {
    json doc;
    try {
      doc = json::parse(text_);
    } catch (const json::parse_error& e) {
      throw ScenarioError("", detail::line_of_offset(text_, e.byte > 0 ? e.byte - 1 : 0), e.what());
    }
    lines_ = detail::locate_lines(text_);
    return scenario(doc);
  }

 private:
  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    const auto it = lines_.find(path);
    throw ScenarioError(path, it == lines_.end() ? 0 : it->second, msg);
  }

  void object(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) const {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : j.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(path + "/" + k, "unknown key '" + k + "'");
    }
  }

  const json* member(const json& j, std::string_view key) const {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
  }

  double number(const json& parent, std::string_view key, const std::string& path, std::optional<double> fallback) const {
    const json* j = member(parent, key);
    const std::string p = path + "/" + std::string(key);
    if (!j) {
      if (!fallback) fail(path, "missing required key '" + std::string(key) + "'");
      return *fallback;
    }
    return number(*j, p);
  }

  double positive(const json& parent, std::string_view key, const std::string& path, std::optional<double> fallback) const {
    const double v = number(parent, key, path, fallback);
    if (!(v > 0)) fail(path + "/" + std::string(key), "must be positive");
    return v;
  }

  double non_negative(const json& parent, std::string_view key, const std::string& path,
                      std::optional<double> fallback) const {
    const double v = number(parent, key, path, fallback);
    if (v < 0) fail(path + "/" + std::string(key), "must be non-negative");
    return v;
  }

  long long integer(const json& parent, std::string_view key, const std::string& path, long long fallback) const {
    const json* j = member(parent, key);
    if (!j) return fallback;
    if (!j->is_number_integer()) fail(path + "/" + std::string(key), "expected an integer");
    return j->get<long long>();
  }

  std::string string(const json& parent, std::string_view key, const std::string& path,
                     std::optional<std::string> fallback) const {
    const json* j = member(parent, key);
    if (!j) {
      if (!fallback) fail(path, "missing required key '" + std::string(key) + "'");
      return *fallback;
    }
    if (!j->is_string()) fail(path + "/" + std::string(key), "expected a string");
    return j->get<std::string>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector(const json& parent, std::string_view key, const std::string& path,
                                     std::optional<Eigen::Matrix<double, N, 1>> fallback) const {
    const json* j = member(parent, key);
    const std::string p = path + "/" + std::string(key);
    if (!j) {
      if (!fallback) fail(path, "missing required key '" + std::string(key) + "'");
      return *fallback;
    }
    if (!j->is_array() || static_cast<int>(j->size()) != N) fail(p, "expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v[i] = number((*j)[i], p + "/" + std::to_string(i));
    return v;
  }

  // Scalar applies to all three axes.
  Eigen::Vector3d axes(const json& parent, std::string_view key, const std::string& path, double fallback) const {
    const json* j = member(parent, key);
    if (j && j->is_number()) return Eigen::Vector3d::Constant(number(*j, path + "/" + std::string(key)));
    return vector<3>(parent, key, path, Eigen::Vector3d::Constant(fallback));
  }

  std::pair<double, double> range(const json& parent, std::string_view key, const std::string& path,
                                  std::pair<double, double> fallback) const {
    const Eigen::Vector2d r = vector<2>(parent, key, path, Eigen::Vector2d(fallback.first, fallback.second));
    if (r[0] > r[1]) fail(path + "/" + std::string(key), "range lower bound exceeds upper bound");
    return {r[0], r[1]};
  }

  LensConstants lens(const json& j, const std::string& path) const {
    object(j, path, {"circle_of_confusion_mm", "sensor_width", "sensor_height", "image_width", "image_height", "skew",
                     "principal_point"});
    LensConstants d;
    LensConstants l;
    l.circle_of_confusion = mm_to_m(positive(j, "circle_of_confusion_mm", path, m_to_mm(d.circle_of_confusion)));
    l.sensor_width = positive(j, "sensor_width", path, d.sensor_width);
    l.sensor_height = positive(j, "sensor_height", path, d.sensor_height);
    l.image_width = static_cast<int>(integer(j, "image_width", path, d.image_width));
    l.image_height = static_cast<int>(integer(j, "image_height", path, d.image_height));
    l.skew = number(j, "skew", path, d.skew);
    l.principal_point = vector<2>(j, "principal_point", path, Eigen::Vector2d(0.5 * l.image_width, 0.5 * l.image_height));
    try {
      validate(l);
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
    return l;
  }

  CameraIntrinsics camera(const json& j, const std::string& path, const CameraIntrinsics& d) const {
    object(j, path, {"focal_length_mm", "focus_distance", "aperture"});
    CameraIntrinsics c;
    c.focal_length = mm_to_m(positive(j, "focal_length_mm", path, m_to_mm(d.focal_length)));
    c.focus_distance = positive(j, "focus_distance", path, d.focus_distance);
    c.aperture = positive(j, "aperture", path, d.aperture);
    if (!(c.focus_distance > c.focal_length)) fail(path + "/focus_distance", "must exceed the focal length");
    return c;
  }

  InitialDrone drone(const json& j, const std::string& path) const {
    object(j, path, {"position", "velocity", "yaw_deg", "pitch_deg"});
    InitialDrone d;
    d.position = vector<3>(j, "position", path, Eigen::Vector3d::Zero());
    d.velocity = vector<3>(j, "velocity", path, Eigen::Vector3d::Zero());
    d.yaw = deg_to_rad(number(j, "yaw_deg", path, 0.0));
    d.pitch = deg_to_rad(number(j, "pitch_deg", path, 0.0));
    return d;
  }

  TargetScript target(const json& j, const std::string& path) const {
    object(j, path, {"id", "features", "waypoints"});
    TargetScript t;
    t.id = string(j, "id", path, std::nullopt);
    if (t.id.empty() || !std::all_of(t.id.begin(), t.id.end(), [](unsigned char ch) {
          return std::isalnum(ch) || ch == '_' || ch == '-';
        })) {
      fail(path + "/id", "target id '" + t.id + "' must be non-empty and use only letters, digits, '_' or '-'");
    }
    if (const json* fs = member(j, "features")) {
      const std::string fp = path + "/features";
      if (!fs->is_array()) fail(fp, "expected an array");
      std::set<std::string> names;
      for (std::size_t i = 0; i < fs->size(); ++i) {
        const std::string p = fp + "/" + std::to_string(i);
        object((*fs)[i], p, {"name", "height_offset"});
        FeaturePoint f{string((*fs)[i], "name", p, std::nullopt), number((*fs)[i], "height_offset", p, 0.0)};
        if (f.name.empty()) fail(p + "/name", "feature name must be non-empty");
        if (!names.insert(f.name).second) fail(p + "/name", "duplicate feature '" + f.name + "'");
        t.features.push_back(std::move(f));
      }
    }
    const json* wps = member(j, "waypoints");
    const std::string wp = path + "/waypoints";
    if (!wps) fail(path, "missing required key 'waypoints'");
    if (!wps->is_array() || wps->empty()) fail(wp, "expected a non-empty array");
    for (std::size_t i = 0; i < wps->size(); ++i) {
      const std::string p = wp + "/" + std::to_string(i);
      object((*wps)[i], p, {"time", "position", "yaw_deg"});
      Waypoint w;
      w.time = number((*wps)[i], "time", p, std::nullopt);
      w.position = vector<3>((*wps)[i], "position", p, std::nullopt);
      w.yaw = deg_to_rad(number((*wps)[i], "yaw_deg", p, 0.0));
      if (!t.waypoints.empty() && !(w.time > t.waypoints.back().time)) {
        fail(p + "/time", "waypoint times must be strictly increasing");
      }
      t.waypoints.push_back(w);
    }
    return t;
  }

  const TargetScript& find_target(const std::vector<TargetScript>& targets, const json& j, const std::string& path) const {
    const std::string id = string(j, "target", path, std::nullopt);
    for (const auto& t : targets) {
      if (t.id == id) return t;
    }
    fail(path + "/target", "unknown target '" + id + "'");
  }

  std::optional<DistanceGoal> distance_goal(const json& parent, std::string_view key, const std::string& path,
                                            const std::vector<TargetScript>& targets) const {
    const json* j = member(parent, key);
    if (!j) return std::nullopt;
    const std::string p = path + "/" + std::string(key);
    object(*j, p, {"distance", "target", "weight"});
    DistanceGoal g;
    g.weight = non_negative(*j, "weight", p, 1.0);
    const bool has_distance = member(*j, "distance") != nullptr;
    const bool has_target = member(*j, "target") != nullptr;
    if (has_distance == has_target) fail(p, "exactly one of 'distance' or 'target' is required");
    if (has_distance) {
      g.meters = positive(*j, "distance", p, std::nullopt);
    } else {
      g.target = find_target(targets, *j, p).id;
    }
    return g;
  }

  Sequence sequence(const json& j, const std::string& path, const std::vector<TargetScript>& targets) const {
    object(j, path, {"start", "name", "near", "far", "image", "depth", "orientation"});
    Sequence s;
    s.start = number(j, "start", path, std::nullopt);
    s.name = string(j, "name", path, std::string());
    ShotDirective& d = s.directive;
    d.near = distance_goal(j, "near", path, targets);
    d.far = distance_goal(j, "far", path, targets);

    auto list = [&](std::string_view key, auto&& each) {
      const json* arr = member(j, key);
      if (!arr) return;
      const std::string p = path + "/" + std::string(key);
      if (!arr->is_array()) fail(p, "expected an array");
      for (std::size_t i = 0; i < arr->size(); ++i) each((*arr)[i], p + "/" + std::to_string(i));
    };
    list("image", [&](const json& e, const std::string& p) {
      object(e, p, {"target", "feature", "point", "weight"});
      ImageGoal g;
      const TargetScript& t = find_target(targets, e, p);
      g.target = t.id;
      g.feature = string(e, "feature", p, std::string());
      if (!g.feature.empty() &&
          std::none_of(t.features.begin(), t.features.end(), [&](const FeaturePoint& f) { return f.name == g.feature; })) {
        fail(p + "/feature", "target '" + t.id + "' has no feature '" + g.feature + "'");
      }
      g.point = vector<2>(e, "point", p, std::nullopt);
      g.weight = non_negative(e, "weight", p, 1.0);
      d.image.push_back(std::move(g));
    });
    list("depth", [&](const json& e, const std::string& p) {
      object(e, p, {"target", "depth", "weight"});
      d.depth.push_back({find_target(targets, e, p).id, positive(e, "depth", p, std::nullopt), non_negative(e, "weight", p, 1.0)});
    });
    list("orientation", [&](const json& e, const std::string& p) {
      object(e, p, {"target", "relative_yaw_deg", "relative_rotation", "weight"});
      const std::string id = find_target(targets, e, p).id;
      const double w = non_negative(e, "weight", p, 1.0);
      const bool has_yaw = member(e, "relative_yaw_deg") != nullptr;
      const bool has_rot = member(e, "relative_rotation") != nullptr;
      if (has_yaw == has_rot) fail(p, "exactly one of 'relative_yaw_deg' or 'relative_rotation' is required");
      if (has_yaw) {
        d.orientation.push_back(OrientationGoal::from_yaw(id, deg_to_rad(number(e, "relative_yaw_deg", p, std::nullopt)), w));
      } else {
        const Eigen::Matrix<double, 9, 1> m = vector<9>(e, "relative_rotation", p, std::nullopt);
        Rotation R = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(m.data());
        if (!(R.transpose() * R).isApprox(Rotation::Identity(), 1e-9) || std::abs(R.determinant() - 1.0) > 1e-9) {
          fail(p + "/relative_rotation", "not a rotation matrix");
        }
        d.orientation.push_back({id, R, w, std::nullopt});
      }
    });

    bool any_weight = false;
    if (d.near && d.near->weight > 0) any_weight = true;
    if (d.far && d.far->weight > 0) any_weight = true;
    for (const auto& g : d.image) any_weight |= g.weight > 0;
    for (const auto& g : d.depth) any_weight |= g.weight > 0;
    for (const auto& g : d.orientation) any_weight |= g.weight > 0;
    if (!any_weight) fail(path, "directive has no positive weight");
    return s;
  }

  SolverConfig solver(const json& j, const std::string& path) const {
    object(j, path, {"horizon", "max_iterations", "gradient_tolerance", "memory", "armijo", "backtrack",
                     "max_backtracks", "max_acceleration", "max_gimbal_rate", "max_focal_rate_mm", "max_focus_rate",
                     "max_aperture_rate", "focal_length_mm", "focus_distance", "aperture", "workspace",
                     "min_target_distance", "collision_weight", "intrinsics_weight", "effort_weight"});
    const SolverConfig d;
    SolverConfig c;
    c.horizon = static_cast<int>(integer(j, "horizon", path, d.horizon));
    c.max_iterations = static_cast<int>(integer(j, "max_iterations", path, d.max_iterations));
    c.gradient_tolerance = positive(j, "gradient_tolerance", path, d.gradient_tolerance);
    c.memory = static_cast<int>(integer(j, "memory", path, d.memory));
    c.armijo = positive(j, "armijo", path, d.armijo);
    c.backtrack = positive(j, "backtrack", path, d.backtrack);
    c.max_backtracks = static_cast<int>(integer(j, "max_backtracks", path, d.max_backtracks));

    const Eigen::Vector3d acc = axes(j, "max_acceleration", path, d.inputs.upper[0]);
    const Eigen::Vector3d rate = axes(j, "max_gimbal_rate", path, d.inputs.upper[3]);
    const double vf = mm_to_m(non_negative(j, "max_focal_rate_mm", path, m_to_mm(d.inputs.upper[6])));
    const double vF = non_negative(j, "max_focus_rate", path, d.inputs.upper[7]);
    const double vA = non_negative(j, "max_aperture_rate", path, d.inputs.upper[8]);
    if ((acc.array() < 0).any()) fail(path + "/max_acceleration", "must be non-negative");
    if ((rate.array() < 0).any()) fail(path + "/max_gimbal_rate", "must be non-negative");
    c.inputs.upper << acc, rate, vf, vF, vA;
    c.inputs.lower = -c.inputs.upper;

    const auto fr = range(j, "focal_length_mm", path, {m_to_mm(d.intrinsics.lower.focal_length), m_to_mm(d.intrinsics.upper.focal_length)});
    const auto Fr = range(j, "focus_distance", path, {d.intrinsics.lower.focus_distance, d.intrinsics.upper.focus_distance});
    const auto Ar = range(j, "aperture", path, {d.intrinsics.lower.aperture, d.intrinsics.upper.aperture});
    c.intrinsics.lower = {mm_to_m(fr.first), Fr.first, Ar.first};
    c.intrinsics.upper = {mm_to_m(fr.second), Fr.second, Ar.second};

    if (const json* ws = member(j, "workspace")) {
      const std::string p = path + "/workspace";
      object(*ws, p, {"lower", "upper"});
      c.workspace_lower = vector<3>(*ws, "lower", p, d.workspace_lower);
      c.workspace_upper = vector<3>(*ws, "upper", p, d.workspace_upper);
    }
    c.min_target_distance = non_negative(j, "min_target_distance", path, d.min_target_distance);
    c.collision_weight = non_negative(j, "collision_weight", path, d.collision_weight);
    c.intrinsics_weight = non_negative(j, "intrinsics_weight", path, d.intrinsics_weight);
    c.effort_weight = non_negative(j, "effort_weight", path, d.effort_weight);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
    return c;
  }

  Scenario scenario(const json& j) const {
    object(j, "", {"version", "name", "duration", "dt", "seed", "noise_sigma", "lens", "camera", "drone", "targets",
                   "sequences", "solver", "costs"});
    Scenario s;
    if (integer(j, "version", "", kScenarioVersion) != kScenarioVersion) {
      fail("/version", "unsupported scenario version (expected " + std::to_string(kScenarioVersion) + ")");
    }
    s.name = string(j, "name", "", std::string());
    s.duration = positive(j, "duration", "", std::nullopt);
    s.dt = positive(j, "dt", "", s.dt);
    const long long seed = integer(j, "seed", "", 0);
    if (seed < 0) fail("/seed", "must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.noise_sigma = non_negative(j, "noise_sigma", "", 0.0);
    s.lens = lens(member(j, "lens") ? j["lens"] : json::object(), "/lens");
    s.intrinsics = camera(member(j, "camera") ? j["camera"] : json::object(), "/camera", s.intrinsics);
    s.drone = drone(member(j, "drone") ? j["drone"] : json::object(), "/drone");

    const json* ts = member(j, "targets");
    if (!ts) fail("", "missing required key 'targets'");
    if (!ts->is_array()) fail("/targets", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < ts->size(); ++i) {
      const std::string p = "/targets/" + std::to_string(i);
      TargetScript t = target((*ts)[i], p);
      if (!ids.insert(t.id).second) fail(p + "/id", "duplicate target id '" + t.id + "'");
      s.targets.push_back(std::move(t));
    }

    const json* seqs = member(j, "sequences");
    if (!seqs) fail("", "missing required key 'sequences'");
    if (!seqs->is_array() || seqs->empty()) fail("/sequences", "expected a non-empty array");
    for (std::size_t i = 0; i < seqs->size(); ++i) {
      const std::string p = "/sequences/" + std::to_string(i);
      Sequence q = sequence((*seqs)[i], p, s.targets);
      if (i == 0 && q.start != 0.0) fail(p + "/start", "the first sequence must start at 0");
      if (i > 0 && !(q.start > s.sequences.back().start)) fail(p + "/start", "sequence start times must be strictly increasing");
      s.sequences.push_back(std::move(q));
    }
    if (!(s.duration > s.sequences.back().start)) fail("/duration", "duration must extend past the last sequence start");

    s.solver = solver(member(j, "solver") ? j["solver"] : json::object(), "/solver");
    if (!s.solver.intrinsics.contains(s.intrinsics)) fail("/camera", "initial intrinsics lie outside the solver's lens range");

    const json costs = member(j, "costs") ? j["costs"] : json::object();
    object(costs, "/costs", {"behind_camera_penalty", "far_saturation"});
    s.costs.behind_camera_penalty = non_negative(costs, "behind_camera_penalty", "/costs", s.costs.behind_camera_penalty);
    s.costs.far_saturation = positive(costs, "far_saturation", "/costs", s.costs.far_saturation);
    return s;
  }

  std::string_view text_;
  std::map<std::string, int> lines_;
};

ordered_json vec(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json distance_goal(const DistanceGoal& g) {
  ordered_json o;
  if (g.target.empty()) {
    o["distance"] = g.meters.value_or(0.0);
  } else {
    o["target"] = g.target;
  }
  o["weight"] = g.weight;
  return o;
}

ordered_json to_json(const Scenario& s) {
  ordered_json o;
  o["version"] = kScenarioVersion;
  o["name"] = s.name;
  o["duration"] = s.duration;
  o["dt"] = s.dt;
  o["seed"] = s.seed;
  o["noise_sigma"] = s.noise_sigma;
  o["lens"] = {{"circle_of_confusion_mm", m_to_mm(s.lens.circle_of_confusion)},
               {"sensor_width", s.lens.sensor_width},
               {"sensor_height", s.lens.sensor_height},
               {"image_width", s.lens.image_width},
               {"image_height", s.lens.image_height},
               {"skew", s.lens.skew},
               {"principal_point", vec(s.lens.principal_point)}};
  o["camera"] = {{"focal_length_mm", m_to_mm(s.intrinsics.focal_length)},
                 {"focus_distance", s.intrinsics.focus_distance},
                 {"aperture", s.intrinsics.aperture}};
  o["drone"] = {{"position", vec(s.drone.position)},
                {"velocity", vec(s.drone.velocity)},
                {"yaw_deg", rad_to_deg(s.drone.yaw)},
                {"pitch_deg", rad_to_deg(s.drone.pitch)}};

  o["targets"] = ordered_json::array();
  for (const auto& t : s.targets) {
    ordered_json tj;
    tj["id"] = t.id;
    tj["features"] = ordered_json::array();
    for (const auto& f : t.features) tj["features"].push_back({{"name", f.name}, {"height_offset", f.height_offset}});
    tj["waypoints"] = ordered_json::array();
    for (const auto& w : t.waypoints) {
      tj["waypoints"].push_back({{"time", w.time}, {"position", vec(w.position)}, {"yaw_deg", rad_to_deg(w.yaw)}});
    }
    o["targets"].push_back(std::move(tj));
  }

  o["sequences"] = ordered_json::array();
  for (const auto& q : s.sequences) {
    ordered_json sj;
    sj["start"] = q.start;
    sj["name"] = q.name;
    const ShotDirective& d = q.directive;
    if (d.near) sj["near"] = distance_goal(*d.near);
    if (d.far) sj["far"] = distance_goal(*d.far);
    sj["image"] = ordered_json::array();
    for (const auto& g : d.image) {
      ordered_json gj;
      gj["target"] = g.target;
      if (!g.feature.empty()) gj["feature"] = g.feature;
      gj["point"] = vec(g.point);
      gj["weight"] = g.weight;
      sj["image"].push_back(std::move(gj));
    }
    sj["depth"] = ordered_json::array();
    for (const auto& g : d.depth) sj["depth"].push_back({{"target", g.target}, {"depth", g.depth}, {"weight", g.weight}});
    sj["orientation"] = ordered_json::array();
    for (const auto& g : d.orientation) {
      ordered_json gj;
      gj["target"] = g.target;
      if (g.relative_yaw) {
        gj["relative_yaw_deg"] = rad_to_deg(*g.relative_yaw);
      } else {
        const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> R = g.relative;
        gj["relative_rotation"] = vec(Eigen::Map<const Eigen::Matrix<double, 9, 1>>(R.data()));
      }
      gj["weight"] = g.weight;
      sj["orientation"].push_back(std::move(gj));
    }
    o["sequences"].push_back(std::move(sj));
  }

  const SolverConfig& c = s.solver;
  if (!(c.inputs.lower == -c.inputs.upper)) {
    throw std::invalid_argument("scenario files only describe symmetric input bounds");
  }
  ordered_json sv;
  sv["horizon"] = c.horizon;
  sv["max_iterations"] = c.max_iterations;
  sv["gradient_tolerance"] = c.gradient_tolerance;
  sv["memory"] = c.memory;
  sv["armijo"] = c.armijo;
  sv["backtrack"] = c.backtrack;
  sv["max_backtracks"] = c.max_backtracks;
  sv["max_acceleration"] = vec(c.inputs.upper.head<3>());
  sv["max_gimbal_rate"] = vec(c.inputs.upper.segment<3>(3));
  sv["max_focal_rate_mm"] = m_to_mm(c.inputs.upper[6]);
  sv["max_focus_rate"] = c.inputs.upper[7];
  sv["max_aperture_rate"] = c.inputs.upper[8];
  sv["focal_length_mm"] = {m_to_mm(c.intrinsics.lower.focal_length), m_to_mm(c.intrinsics.upper.focal_length)};
  sv["focus_distance"] = {c.intrinsics.lower.focus_distance, c.intrinsics.upper.focus_distance};
  sv["aperture"] = {c.intrinsics.lower.aperture, c.intrinsics.upper.aperture};
  sv["workspace"] = {{"lower", vec(c.workspace_lower)}, {"upper", vec(c.workspace_upper)}};
  sv["min_target_distance"] = c.min_target_distance;
  sv["collision_weight"] = c.collision_weight;
  sv["intrinsics_weight"] = c.intrinsics_weight;
  sv["effort_weight"] = c.effort_weight;
  o["solver"] = std::move(sv);
  o["costs"] = {{"behind_camera_penalty", s.costs.behind_camera_penalty}, {"far_saturation", s.costs.far_saturation}};
  return o;
}

}  // namespace

Scenario parse_scenario(std::string_view document) { return Parser(document).parse(); }

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", 0, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string dump_scenario(const Scenario& scenario) { return to_json(scenario).dump(2) + "\n"; }

std::string dump_defaults() {
  Scenario s;
  s.name = "defaults";
  return dump_scenario(s);
}

bool operator==(const TraceRecord& a, const TraceRecord& b) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  auto same_cost = [&](const CostBreakdown& x, const CostBreakdown& y) {
    return same(x.j_dof, y.j_dof) && same(x.j_im, y.j_im) && same(x.j_p, y.j_p) && same(x.total, y.total) &&
           x.behind_camera == y.behind_camera;
  };
  return same(a.time, b.time) && a.sequence == b.sequence && a.drone.position == b.drone.position &&
         a.drone.velocity == b.drone.velocity && a.drone.rotation == b.drone.rotation && a.intrinsics == b.intrinsics &&
         same(a.dof.near, b.dof.near) && same(a.dof.far, b.dof.far) && a.desired_near == b.desired_near &&
         a.desired_far == b.desired_far && same_cost(a.cost, b.cost) && same(a.penalty, b.penalty) &&
         a.drone_input == b.drone_input && a.camera_input == b.camera_input && a.iterations == b.iterations &&
         a.converged == b.converged && a.clamp_flags == b.clamp_flags && a.targets == b.targets;
}

namespace {

bool finite(const DroneState& d) {
  return d.position.allFinite() && d.velocity.allFinite() && d.rotation.allFinite();
}

bool finite(const CameraIntrinsics& c) {
  return std::isfinite(c.focal_length) && std::isfinite(c.focus_distance) && std::isfinite(c.aperture);
}

}  // namespace

RunResult run(const Scenario& scenario, const RunObserver& observer) {
  RunResult result;
  for (const auto& t : scenario.targets) result.trace.target_ids.push_back(t.id);

  Controller controller(scenario.lens, scenario.solver, scenario.dt, scenario.targets);
  MeasurementChannel channel(scenario.noise_sigma, scenario.seed);
  DroneState drone = scenario.drone.state();
  CameraIntrinsics intr = scenario.solver.intrinsics.clamp(scenario.intrinsics);

  const auto ticks = static_cast<long long>(std::floor(scenario.duration / scenario.dt + 1e-9));
  for (long long k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) * scenario.dt;
    const std::vector<TargetState> truth = step_targets(scenario.targets, t);
    const Measurement meas = channel(truth);
    const int seq = scenario.active_sequence(t);

    TraceRecord rec;
    rec.time = t;
    rec.sequence = seq;
    rec.drone = drone;
    rec.intrinsics = intr;
    try {
      const ControlOutput out = controller.control_step(drone, intr, meas, scenario.sequences[seq].directive);
      rec.dof = dof_interval(intr, scenario.lens);
      rec.desired_near = out.shot.near_weight > 0 ? out.shot.desired_near : std::nullopt;
      rec.desired_far = out.shot.far_weight > 0 ? out.shot.desired_far : std::nullopt;
      rec.cost = stage_cost(drone.pose(), intr, scenario.lens, out.shot, scenario.costs);
      rec.penalty = out.result.constraints.intrinsics_penalty + out.result.constraints.collision_penalty;
      rec.drone_input = out.drone_input;
      rec.camera_input = out.camera_input;
      rec.iterations = out.result.iterations;
      rec.converged = out.result.converged;
      for (std::size_t i = 0; i < truth.size(); ++i) rec.targets.push_back({truth[i].pose.position, meas[i].position});

      drone = step_drone(drone, out.drone_input, scenario.dt);
      const CameraStep cs = step_camera(intr, out.camera_input, scenario.dt, scenario.solver.intrinsics);
      intr = cs.intrinsics;
      rec.clamp_flags = cs.clamped;
    } catch (const std::domain_error& e) {
      result.status = RunStatus::kNumericFailure;
      result.message = "t=" + std::to_string(t) + ": " + e.what();
      break;
    }
    result.trace.records.push_back(rec);
    if (observer) observer(result.trace.records.back());
    if (!finite(drone) || !finite(intr) || !std::isfinite(rec.cost.total)) {
      result.status = RunStatus::kNumericFailure;
      result.message = "t=" + std::to_string(t) + ": state or cost is no longer finite";
      break;
    }
  }
  return result;
}

}  // namespace cinempc
