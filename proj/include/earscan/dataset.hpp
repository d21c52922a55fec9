#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "earscan/noise_synth.hpp"
#include "earscan/occlusion.hpp"

namespace earscan {

struct SplitSpec {
    struct Split {
        std::string name;
        std::vector<std::string> subjects;
        /// Fractions of l; 0 denotes the unmodified clean level.
        std::vector<double> sigmas;
    };
    std::vector<Split> splits;
    Vec3 disc_center = Vec3::Zero();
    double disc_radius = 40.0;
};

/// 20 training subjects x {clean, 0.1..0.5 %}, 10 validation and 10 testing
/// subjects x {0.1, 0.3, 0.5 %}, taking subjects from `subjects` in order.
SplitSpec standard_split(const std::vector<std::string>& subjects);

/// JSON: {"splits":[{"name","subjects","sigmas"}], "disc":{"center":[x,y,z],"radius":r}}.
SplitSpec parse_split_spec(const std::string& json_text);

/// "clean" for 0, otherwise the percentage of l, e.g. 0.003 -> "0.3pct".
std::string sigma_tag(double sigma);

struct DatasetEntry {
    std::string split;
    std::string subject;
    double sigma = 0.0;
    std::string tag;
    std::uint64_t seed = 0;
    std::filesystem::path noisy;
    std::filesystem::path clean;
    std::size_t clean_count = 0;
    std::size_t noisy_count = 0;
    double diagonal = 0.0;
    double cmp_target = 100.0;
};

struct DatasetSummary {
    std::vector<DatasetEntry> entries;
    std::vector<std::pair<std::string, std::size_t>> counts;
};

/// Reads `<mesh_dir>/<subject>.ply` for every subject, extracts the ear disc
/// (computing vertex normals and AO when the mesh lacks them), writes
/// `<out>/<split>/<subject>_<tag>_{noisy,clean}.ply` and `<out>/manifest.json`.
DatasetSummary build_dataset(const std::filesystem::path& mesh_dir, const SplitSpec& spec,
                             const NoiseParams& params, std::uint64_t seed,
                             const std::filesystem::path& out_dir, const AoConfig& ao_cfg = {});

/// Mesh -> ear disc with normals and AO, as used for every dataset subject.
PointCloud prepare_ear_cloud(TriangleMesh mesh, const Vec3& center, double radius, const AoConfig& ao_cfg);

}  // namespace earscan
