#pragma once

#include <optional>
#include <vector>

#include <json.hpp>
#include "magwaist/loops.hpp"

namespace magwaist {

inline constexpr int kDefaultHomologyGrid = 256;

// Integer 2-chain Π = Σ n_i Σ_i with ∂Π = γ, computed on a K×K face grid of
// the fundamental domain. Regions Σ_i are the 4-connected face sets not
// separated by the multicurve; region ids are 1-based.
struct BoundaryCertificate {
    SurfaceModel surface;
    Multicurve curves;
    int grid = kDefaultHomologyGrid;
    std::vector<int> region_labels;  // K·K faces, row-major with x fastest
    std::vector<int> chain_coeffs;   // n_i for region i+1, normalized so min n = 0
    std::vector<int> iota_plus;      // region on the left of each component
    std::vector<int> iota_minus;     // region on the right of each component
    // Filled by decompose_topological_boundaries.
    std::vector<std::vector<int>> decomposition;
    std::vector<bool> piece_irreducible;

    int region_count() const { return static_cast<int>(chain_coeffs.size()); }
    // Coefficients take only the values 0 and 1: γ bounds an open set.
    bool topological() const;
    int coefficient_at_face(int i, int j) const;
};

// Returns the certificate when [mc] = 0, std::nullopt when the multicurve is
// not null-homologous. Throws RasterizationError when two strands pass
// between the same pair of face centers or a component misses the grid.
std::optional<BoundaryCertificate> solve_bounding_chain(const SurfaceModel& s, const Multicurve& mc,
                                                        int grid = kDefaultHomologyGrid);

// Recomputes the discrete boundary of `coeffs` (per-face values) and compares
// it with the oriented dual-edge crossings of the curves.
bool verify_boundary(const BoundaryCertificate& cert);

// Splits the certified boundary into topological boundaries: J₁ = {ι₊(c)} for
// the lowest-index remaining component c, J_{h+1} = ι₊(ι₋⁻¹(J_h)), piece =
// components with ι₊ ∈ ∪J_h and ι₋ ∉ ∪J_h; repeated on what is left. Also
// records the pieces in cert.decomposition.
std::vector<Multicurve> decompose_topological_boundaries(BoundaryCertificate& cert);

struct IrreducibilityReport {
    bool irreducible = false;
    std::vector<Eigen::VectorXi> component_classes;
    bool bound_ok = false;             // m <= genus + 1
    bool classes_primitive_distinct = true;  // only meaningful for m > 1
};

// Throws NotABoundaryError unless mc is a topological boundary.
IrreducibilityReport check_irreducible(const SurfaceModel& s, const Multicurve& mc,
                                       int grid = kDefaultHomologyGrid);

// JSON form: grid size, run-length encoded region labels, coefficients,
// ι± per component and the decomposition indices.
nlohmann::json certificate_to_json(const BoundaryCertificate& cert);

}  // namespace magwaist
