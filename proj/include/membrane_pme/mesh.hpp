#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "membrane_pme/model.hpp"

namespace membrane_pme {

/// Subdomain of a cell. The effective problem only uses Left and Right.
enum class Region { Left, Membrane, Right };

const char* region_name(Region r) noexcept;

enum class MeshKind { ThinLayer, Effective, Generic };

/// Immutable 1D cell-centred mesh on [-L/2, L/2].
///
/// Face i sits between cells i-1 and i; faces 0 and n are the outer boundary. Normals
/// point in +x. `interface_faces()` lists the faces at -ε/2, +ε/2 (thin layer) or the
/// single face at 0 (effective).
class Mesh {
public:
    /// General constructor; checks that faces are strictly increasing and symmetric
    /// about 0, and that tags match the cell count.
    Mesh(std::vector<double> faces, std::vector<Region> tags, MeshKind kind,
         std::vector<std::size_t> interface_faces, std::optional<double> epsilon = std::nullopt);

    std::size_t num_cells() const noexcept { return widths_.size(); }
    double length() const noexcept { return faces_.back() - faces_.front(); }
    MeshKind kind() const noexcept { return kind_; }
    std::optional<double> epsilon() const noexcept { return epsilon_; }

    std::span<const double> faces() const noexcept { return faces_; }
    std::span<const double> centers() const noexcept { return centers_; }
    std::span<const double> widths() const noexcept { return widths_; }
    std::span<const Region> regions() const noexcept { return tags_; }
    std::span<const std::size_t> interface_faces() const noexcept { return interface_faces_; }

    /// Index of the face at coordinate x (relative tolerance 1e-12 L), if any.
    std::optional<std::size_t> find_face(double x) const;

    /// Index of the cell containing x; points on a face belong to the cell on the right,
    /// the last face belongs to the last cell.
    std::size_t cell_containing(double x) const;

private:
    std::vector<double> faces_;
    std::vector<double> centers_;
    std::vector<double> widths_;
    std::vector<Region> tags_;
    std::vector<std::size_t> interface_faces_;
    MeshKind kind_;
    std::optional<double> epsilon_;
};

/// Cell-averaged density at one instant.
struct Field {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> u;
    double t = 0.0;

    /// Throws NumericError if any value is non-finite or below -tol.
    void validate(double tol = 0.0) const;
    /// Σ u_j Δx_j.
    double mass() const;
    double max_value() const;
    double min_value() const;
};

inline constexpr std::size_t kMinMembraneCells = 4;
inline constexpr std::size_t kMinOuterCells = 8;
inline constexpr std::size_t kMinSideCells = 8;

/// Thin-layer mesh: n_outer uniform cells on each of (-L/2, -ε/2) and (ε/2, L/2) and
/// n_membrane uniform cells on the membrane. ±ε/2 are faces by construction.
std::shared_ptr<const Mesh> build_thin_mesh(double length, double epsilon, std::size_t n_membrane,
                                            std::size_t n_outer);

/// Effective mesh: n_side uniform cells on each side of the interface face at 0.
std::shared_ptr<const Mesh> build_effective_mesh(double length, std::size_t n_side);

/// μ per cell: mu1_eps on Left cells, mu2_eps on Membrane cells, mu3_eps on Right cells.
std::vector<double> mobility_per_cell(const Mesh& mesh, const MobilityRealization& real);

/// Bulk mobilities μ̃1 / μ̃3 per cell of an effective mesh.
std::vector<double> effective_mobility_per_cell(const Mesh& mesh, const ModelParams& params);

}  // namespace membrane_pme
