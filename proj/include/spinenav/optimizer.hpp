#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "spinenav/mesh.hpp"
#include "spinenav/smoothing.hpp"

namespace spinenav {

/// Search grid for the smoothing parameter sweep. Value sets are treated as
/// sets: validate() sorts them ascending and drops duplicates.
struct GridSpec {
    std::vector<int> k_values;
    std::vector<int> iteration_values;
    std::vector<double> alpha_values;
    double resolution_mm = 1.0;
    int top_n = 5;

    void validate();

    /// Loads {"k": [...], "iterations": [...], "alpha": [...],
    /// "resolution_mm": x, "top_n": n} (the last two optional).
    static GridSpec from_json_text(const std::string& text);

    /// Default evaluation sweep:
    /// k in {8,16,32,64,128}, iterations in {1,5,10,20,50},
    /// alpha in {0.1,0.3,0.5,0.7,1.0}.
    static GridSpec evaluation_grid();
};

struct GridResult {
    double dice = 0.0;
    int k = 0;
    int iterations = 0;
    double alpha = 0.0;
    /// Populated for the first top_n ranks only; null beyond that.
    std::shared_ptr<const TriangleMesh> smoothed;
};

/// Exhaustively evaluates every (k, iterations, alpha) triplet: smooths the
/// mri mesh, voxelizes it over the shared bounds of both input meshes, and
/// scores shell Dice against the voxelized gt mesh (voxelized once up
/// front). Returns all |K|*|I|*|A| results sorted by Dice descending, ties
/// broken by (k, iterations, alpha) ascending; the first top_n results carry
/// their smoothed meshes.
///
/// `threads` = 0 picks the hardware concurrency. Serial and concurrent runs
/// produce identical output.
std::vector<GridResult> optimize(const TriangleMesh& gt_mesh, const TriangleMesh& mri_mesh,
                                 const GridSpec& spec, unsigned threads = 0);

/// `rank{r}_k{k}_iters{it}_alpha{a:.1f}_dice{d:.4f}.stl`, r 1-based.
std::string result_filename(int rank, int k, int iterations, double alpha, double dice);

/// Writes each mesh-carrying result as binary STL under `out_dir` using
/// result_filename, plus a `summary.json` array of
/// {rank, k, iterations, alpha, dice, filename}. Returns the written paths
/// (STLs in rank order, then the summary). Reruns are byte-identical.
std::vector<std::filesystem::path> export_best(const std::vector<GridResult>& results,
                                               const std::filesystem::path& out_dir);

} // namespace spinenav
