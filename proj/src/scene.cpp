#include "uavdt/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uavdt/errors.hpp"

namespace uavdt {

namespace {

// Tolerance for endpoint/plane contact in the occlusion test, as a fraction
// of the segment parameter.
constexpr double kContactEps = 1e-9;

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("generate_urban_grid: " + what);
}

} // namespace

Scene generate_urban_grid(const GridSceneParams& p) {
    require(p.rows >= 1, "rows must be >= 1");
    require(p.cols >= 1, "cols must be >= 1");
    require(p.building_footprint_m > 0, "building_footprint_m must be > 0");
    require(p.street_width_m > 0, "street_width_m must be > 0");
    require(p.height_min_m > 0, "height_min_m must be > 0");
    require(p.height_min_m <= p.height_max_m, "height range is inverted");
    require(p.n_receivers >= 1, "n_receivers must be >= 1");
    require(p.receiver_height_m >= 0, "receiver_height_m must be >= 0");
    require(p.ground_reflectance >= 0 && p.ground_reflectance <= 1,
            "ground_reflectance must be in [0,1]");
    require(p.building_reflectance >= 0 && p.building_reflectance <= 1,
            "building_reflectance must be in [0,1]");
    require(p.flight_floor_m > 0 && p.flight_floor_m < p.flight_ceiling_m,
            "flight floor/ceiling range is invalid");
    require(p.start_altitude_m >= p.flight_floor_m && p.start_altitude_m <= p.flight_ceiling_m,
            "start_altitude_m outside the flight volume");

    const double fp = p.building_footprint_m;
    const double sw = p.street_width_m;
    const double extent_x = p.cols * fp + (p.cols + 1) * sw;
    const double extent_y = p.rows * fp + (p.rows + 1) * sw;

    Scene scene;
    scene.ground_reflectance = p.ground_reflectance;
    scene.bounds = Aabb{{0.0, 0.0, p.flight_floor_m},
                        {quantize_mm(extent_x), quantize_mm(extent_y), p.flight_ceiling_m}};

    std::mt19937_64 rng(p.seed);

    // Heights first: receiver count must not perturb the building layout.
    for (int r = 0; r < p.rows; ++r) {
        for (int c = 0; c < p.cols; ++c) {
            const double x0 = quantize_mm(sw + c * (fp + sw));
            const double y0 = quantize_mm(sw + r * (fp + sw));
            const double h = quantize_mm(uniform_range(rng, p.height_min_m, p.height_max_m));
            scene.buildings.push_back(Building{{x0, y0, 0.0},
                                               {quantize_mm(x0 + fp), quantize_mm(y0 + fp), h},
                                               p.building_reflectance});
        }
    }

    // Receivers at random street positions, with a small clearance from the
    // building walls so links never start exactly on a face plane.
    const double clearance = 0.1;
    const int max_attempts = 1000;
    for (int i = 0; i < p.n_receivers; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
            const double x = quantize_mm(uniform_range(rng, 0.0, extent_x));
            const double y = quantize_mm(uniform_range(rng, 0.0, extent_y));
            bool clear = true;
            for (const Building& b : scene.buildings) {
                if (x >= b.min_corner.x - clearance && x <= b.max_corner.x + clearance &&
                    y >= b.min_corner.y - clearance && y <= b.max_corner.y + clearance) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                scene.receivers.push_back({x, y, p.receiver_height_m});
                placed = true;
            }
        }
        if (!placed) {
            throw std::runtime_error("generate_urban_grid: failed to place receiver " +
                                     std::to_string(i) + " after " +
                                     std::to_string(max_attempts) + " attempts");
        }
    }

    scene.uav_start = {quantize_mm(extent_x / 2.0), quantize_mm(extent_y / 2.0),
                       p.start_altitude_m};
    return scene;
}

std::vector<Face> candidate_faces(const Scene& scene) {
    std::vector<Face> faces;
    faces.reserve(1 + 4 * scene.buildings.size());

    Face ground;
    ground.building = kGroundFace;
    ground.axis = 2;
    ground.offset = 0.0;
    ground.u_min = scene.bounds.min.x;
    ground.u_max = scene.bounds.max.x;
    ground.v_min = scene.bounds.min.y;
    ground.v_max = scene.bounds.max.y;
    ground.reflectance = scene.ground_reflectance;
    faces.push_back(ground);

    for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
        const Building& b = scene.buildings[i];
        const auto wall = [&](int axis, double offset) {
            Face f;
            f.building = static_cast<int>(i);
            f.axis = axis;
            f.offset = offset;
            const auto [ua, va] = face_plane_axes(axis);
            f.u_min = b.min_corner[ua];
            f.u_max = b.max_corner[ua];
            f.v_min = b.min_corner[va];
            f.v_max = b.max_corner[va];
            f.reflectance = b.reflectance;
            return f;
        };
        faces.push_back(wall(0, b.min_corner.x));
        faces.push_back(wall(0, b.max_corner.x));
        faces.push_back(wall(1, b.min_corner.y));
        faces.push_back(wall(1, b.max_corner.y));
    }
    return faces;
}

namespace {

// Closed-box slab intersection of the segment p + t*(q - p), t in [0, 1].
// Returns false when the segment misses the box entirely.
bool segment_box_interval(const Building& b, const Vec3& p, const Vec3& q, double& t0,
                          double& t1) {
    t0 = 0.0;
    t1 = 1.0;
    for (int a = 0; a < 3; ++a) {
        const double d = q[a] - p[a];
        const double lo = b.min_corner[a];
        const double hi = b.max_corner[a];
        if (d == 0.0) {
            if (p[a] < lo || p[a] > hi) return false;
            continue;
        }
        double ta = (lo - p[a]) / d;
        double tb = (hi - p[a]) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

bool on_face_plane(const Face& f, const Vec3& pt, double eps) {
    if (std::abs(pt[f.axis] - f.offset) > eps) return false;
    const auto [ua, va] = face_plane_axes(f.axis);
    return pt[ua] >= f.u_min - eps && pt[ua] <= f.u_max + eps && pt[va] >= f.v_min - eps &&
           pt[va] <= f.v_max + eps;
}

} // namespace

bool segment_occluded(const Scene& scene, const Vec3& p, const Vec3& q, const Face* exclude) {
    for (const Building& b : scene.buildings) {
        double t0 = 0.0, t1 = 0.0;
        if (!segment_box_interval(b, p, q, t0, t1)) continue;
        // Contact confined to an endpoint never occludes.
        const double lo = std::max(t0, kContactEps);
        const double hi = std::min(t1, 1.0 - kContactEps);
        if (lo > hi) continue;
        if (exclude != nullptr) {
            // Ignore contact that lies entirely on the excluded face plane
            // (both contact endpoints on the plane implies the whole interval
            // is, since the box interval is a straight sub-segment).
            const Vec3 a = p + (q - p) * lo;
            const Vec3 c = p + (q - p) * hi;
            const double eps = 1e-9 * (1.0 + distance(p, q));
            if (on_face_plane(*exclude, a, eps) && on_face_plane(*exclude, c, eps)) continue;
        }
        return true;
    }
    return false;
}

std::vector<std::string> validate_scene(const Scene& scene) {
    std::vector<std::string> violations;
    const auto bad = [&](const std::string& msg) { violations.push_back(msg); };

    for (std::size_t i = 0; i < scene.buildings.size(); ++i) {
        const Building& b = scene.buildings[i];
        const std::string name = "building " + std::to_string(i);
        if (!b.min_corner.finite() || !b.max_corner.finite()) bad(name + ": non-finite corner");
        if (!(b.min_corner.x < b.max_corner.x && b.min_corner.y < b.max_corner.y &&
              b.min_corner.z < b.max_corner.z))
            bad(name + ": min_corner must be component-wise below max_corner");
        if (b.min_corner.z != 0.0) bad(name + ": must rise from the ground plane (min z = 0)");
        if (!(b.reflectance >= 0.0 && b.reflectance <= 1.0))
            bad(name + ": reflectance outside [0,1]");
    }
    if (!(scene.ground_reflectance >= 0.0 && scene.ground_reflectance <= 1.0))
        bad("ground: reflectance outside [0,1]");
    if (!scene.bounds.valid()) bad("bounds: invalid box");
    if (scene.receivers.empty()) bad("receivers: at least one receiver required");
    for (std::size_t i = 0; i < scene.receivers.size(); ++i) {
        const Vec3& r = scene.receivers[i];
        const std::string name = "receiver " + std::to_string(i);
        if (!r.finite()) bad(name + ": non-finite position");
        // Receivers live on the ground below the flight floor; containment is
        // checked on the horizontal footprint only.
        if (!scene.bounds.contains_xy(r)) bad(name + ": outside the scene footprint");
        for (std::size_t j = 0; j < scene.buildings.size(); ++j) {
            if (scene.buildings[j].contains(r))
                bad(name + ": inside building " + std::to_string(j));
        }
    }
    if (!scene.uav_start.finite()) bad("uav_start: non-finite position");
    if (!scene.bounds.contains(scene.uav_start)) bad("uav_start: outside bounds");
    return violations;
}

namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string fmt_vec(const Vec3& v) {
    return fmt_num(v.x) + "," + fmt_num(v.y) + "," + fmt_num(v.z);
}

struct SceneParser {
    const std::string& origin;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
    }

    double num(const std::string& s, const std::string& field) const {
        const char* begin = s.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0' || !std::isfinite(v))
            fail(field + ": not a finite number: '" + s + "'");
        return v;
    }

    Vec3 vec(const std::string& s, const std::string& field) const {
        const auto c1 = s.find(',');
        const auto c2 = s.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            fail(field + ": expected <x,y,z>, got '" + s + "'");
        return {num(s.substr(0, c1), field), num(s.substr(c1 + 1, c2 - c1 - 1), field),
                num(s.substr(c2 + 1), field)};
    }

    // Splits "key=value" tokens of one record line.
    std::string field(const std::string& token, const std::string& key) const {
        const std::string prefix = key + "=";
        if (token.rfind(prefix, 0) != 0)
            fail("expected field '" + key + "', got '" + token + "'");
        return token.substr(prefix.size());
    }

    double reflectance(const std::string& token, const std::string& what) const {
        const double r = num(field(token, "reflectance"), what + " reflectance");
        if (r < 0.0 || r > 1.0) fail(what + " reflectance=" + fmt_num(r) + " outside [0,1]");
        return r;
    }
};

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

} // namespace

std::string scene_to_text(const Scene& scene) {
    std::string out = "scene v1\n";
    out += "ground reflectance=" + fmt_num(scene.ground_reflectance) + "\n";
    out += "bounds min=" + fmt_vec(scene.bounds.min) + " max=" + fmt_vec(scene.bounds.max) + "\n";
    for (const Building& b : scene.buildings) {
        out += "building min=" + fmt_vec(b.min_corner) + " max=" + fmt_vec(b.max_corner) +
               " reflectance=" + fmt_num(b.reflectance) + "\n";
    }
    for (const Vec3& r : scene.receivers) out += "receiver pos=" + fmt_vec(r) + "\n";
    out += "uav start=" + fmt_vec(scene.uav_start) + "\n";
    return out;
}

Scene scene_from_text(const std::string& text) { return scene_from_text(text, "<scene>"); }

Scene scene_from_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    SceneParser p{origin};
    Scene scene;
    bool have_header = false, have_ground = false, have_bounds = false, have_uav = false;

    while (std::getline(in, line)) {
        ++p.line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (!have_header) {
            if (tokens.size() != 2 || tokens[0] != "scene" || tokens[1] != "v1")
                p.fail("missing scene header (expected 'scene v1')");
            have_header = true;
            continue;
        }
        const std::string& kind = tokens[0];
        if (kind == "ground") {
            if (tokens.size() != 2) p.fail("ground: expected 'ground reflectance=<r>'");
            scene.ground_reflectance = p.reflectance(tokens[1], "ground");
            have_ground = true;
        } else if (kind == "bounds") {
            if (tokens.size() != 3) p.fail("bounds: expected 'bounds min=<x,y,z> max=<x,y,z>'");
            scene.bounds.min = p.vec(p.field(tokens[1], "min"), "bounds min");
            scene.bounds.max = p.vec(p.field(tokens[2], "max"), "bounds max");
            have_bounds = true;
        } else if (kind == "building") {
            if (tokens.size() != 4)
                p.fail("building: expected 'building min=... max=... reflectance=...'");
            Building b;
            b.min_corner = p.vec(p.field(tokens[1], "min"), "building min");
            b.max_corner = p.vec(p.field(tokens[2], "max"), "building max");
            b.reflectance = p.reflectance(tokens[3], "building");
            scene.buildings.push_back(b);
        } else if (kind == "receiver") {
            if (tokens.size() != 2) p.fail("receiver: expected 'receiver pos=<x,y,z>'");
            scene.receivers.push_back(p.vec(p.field(tokens[1], "pos"), "receiver pos"));
        } else if (kind == "uav") {
            if (tokens.size() != 2) p.fail("uav: expected 'uav start=<x,y,z>'");
            scene.uav_start = p.vec(p.field(tokens[1], "start"), "uav start");
            have_uav = true;
        } else {
            p.fail("unknown record '" + kind + "'");
        }
    }

    ++p.line_no;
    if (!have_header) p.fail("missing scene header");
    if (!have_ground) p.fail("missing 'ground' record");
    if (!have_bounds) p.fail("missing 'bounds' record");
    if (!have_uav) p.fail("missing 'uav' record");

    const auto violations = validate_scene(scene);
    if (!violations.empty()) throw ConfigError(origin + ": invalid scene: " + violations.front());
    return scene;
}

void write_scene_file(const Scene& scene, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open scene file for writing: " + path.string());
    out << scene_to_text(scene);
    if (!out) throw std::runtime_error("failed writing scene file: " + path.string());
}

Scene read_scene_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scene file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return scene_from_text(buf.str(), path.string());
}

} // namespace uavdt
