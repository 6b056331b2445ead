#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavdt/vec3.hpp"

namespace uavdt {

// Axis-aligned box rising from the ground plane. Reflectance is the amplitude
// reflection coefficient of its faces, in [0, 1].
struct Building {
    Vec3 min_corner;
    Vec3 max_corner;
    double reflectance = 0.6;

    bool contains(const Vec3& p) const { // closed box
        return p.x >= min_corner.x && p.x <= max_corner.x &&
               p.y >= min_corner.y && p.y <= max_corner.y &&
               p.z >= min_corner.z && p.z <= max_corner.z;
    }

    bool operator==(const Building&) const = default;
};

inline constexpr int kGroundFace = -1;

// One candidate reflector: a rectangular patch of an axis-aligned plane.
// axis selects the plane coordinate (0=x, 1=y, 2=z); the extent intervals run
// along the two remaining axes in ascending axis order.
struct Face {
    int building = kGroundFace; // owning building index, or kGroundFace
    int axis = 2;
    double offset = 0.0;
    double u_min = 0.0, u_max = 0.0;
    double v_min = 0.0, v_max = 0.0;
    double reflectance = 0.0;
};

// The two in-plane axes for a face with the given plane axis.
inline std::pair<int, int> face_plane_axes(int axis) {
    if (axis == 0) return {1, 2};
    if (axis == 1) return {0, 2};
    return {0, 1};
}

struct Scene {
    std::vector<Building> buildings;
    double ground_reflectance = 0.6;
    std::vector<Vec3> receivers;
    Vec3 uav_start;
    Aabb bounds; // flight volume

    int receiver_count() const { return static_cast<int>(receivers.size()); }

    // Scene complexity figure: buildings plus candidate reflecting faces
    // (4 walls per building plus the ground).
    int complexity() const {
        const int b = static_cast<int>(buildings.size());
        return b + 4 * b + 1;
    }

    bool operator==(const Scene&) const = default;
};

struct GridSceneParams {
    int rows = 3;
    int cols = 4;
    double building_footprint_m = 30.0;
    double street_width_m = 20.0;
    double height_min_m = 15.0;
    double height_max_m = 45.0;
    int n_receivers = 3;
    std::uint64_t seed = 42;
    double start_altitude_m = 40.0;
    double receiver_height_m = 1.5;
    double ground_reflectance = 0.6;
    double building_reflectance = 0.6;
    double flight_floor_m = 10.0;
    double flight_ceiling_m = 120.0;
};

// Seeded procedural city: rows x cols square buildings on a street grid,
// uniformly random heights, receivers at random street locations. Pure
// function of its parameters; identical inputs give bit-identical scenes.
// Throws ConfigError on bad parameters, std::runtime_error when receiver
// placement exhausts its attempt budget.
Scene generate_urban_grid(const GridSceneParams& params);

// Ground face first, then the four vertical walls of each building in
// building order (x-min, x-max, y-min, y-max). Face ids used by the channel
// tracer are indices into this list.
std::vector<Face> candidate_faces(const Scene& scene);

// True iff the open segment (p, q) touches the interior or boundary of any
// building box (slab test). Contact confined to an endpoint does not occlude,
// nor does contact lying on the `exclude` face's plane.
bool segment_occluded(const Scene& scene, const Vec3& p, const Vec3& q,
                      const Face* exclude = nullptr);

// Empty iff all scene invariants hold; each entry names the offending entity.
std::vector<std::string> validate_scene(const Scene& scene);

// Canonical structured-text form:
//   scene v1
//   ground reflectance=<r>
//   bounds min=<x,y,z> max=<x,y,z>
//   building min=<x,y,z> max=<x,y,z> reflectance=<r>   (one per building)
//   receiver pos=<x,y,z>                               (one per receiver)
//   uav start=<x,y,z>
// Numbers carry 9 significant digits.
std::string scene_to_text(const Scene& scene);
// ConfigError names line and field; origin labels the error source.
Scene scene_from_text(const std::string& text);
Scene scene_from_text(const std::string& text, const std::string& origin);

void write_scene_file(const Scene& scene, const std::filesystem::path& path);
Scene read_scene_file(const std::filesystem::path& path);

} // namespace uavdt
