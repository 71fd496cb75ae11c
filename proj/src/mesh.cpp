#include "membrane_pme/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "membrane_pme/errors.hpp"

namespace membrane_pme {

const char* region_name(Region r) noexcept {
    switch (r) {
        case Region::Left: return "left";
        case Region::Membrane: return "membrane";
        case Region::Right: return "right";
    }
    return "?";
}

Mesh::Mesh(std::vector<double> faces, std::vector<Region> tags, MeshKind kind,
           std::vector<std::size_t> interface_faces, std::optional<double> epsilon)
    : faces_(std::move(faces)),
      tags_(std::move(tags)),
      interface_faces_(std::move(interface_faces)),
      kind_(kind),
      epsilon_(epsilon) {
    if (faces_.size() < 2) throw GeometryError("mesh needs at least one cell");
    if (tags_.size() + 1 != faces_.size()) throw GeometryError("one region tag per cell required");
    for (std::size_t i = 1; i < faces_.size(); ++i) {
        if (!(faces_[i] > faces_[i - 1])) throw GeometryError("mesh faces must be strictly increasing");
    }
    const double half = 0.5 * (faces_.back() - faces_.front());
    if (std::abs(faces_.front() + half) > 1e-12 * half) {
        throw GeometryError("mesh must span [-L/2, L/2]");
    }
    for (std::size_t f : interface_faces_) {
        if (f == 0 || f >= faces_.size() - 1) throw GeometryError("interface faces must be interior");
    }
    const std::size_t n = tags_.size();
    centers_.resize(n);
    widths_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        centers_[j] = 0.5 * (faces_[j] + faces_[j + 1]);
        widths_[j] = faces_[j + 1] - faces_[j];
    }
}

std::optional<std::size_t> Mesh::find_face(double x) const {
    const double tol = 1e-12 * length();
    auto it = std::lower_bound(faces_.begin(), faces_.end(), x - tol);
    if (it != faces_.end() && std::abs(*it - x) <= tol) {
        return static_cast<std::size_t>(it - faces_.begin());
    }
    return std::nullopt;
}

std::size_t Mesh::cell_containing(double x) const {
    auto it = std::upper_bound(faces_.begin(), faces_.end(), x);
    if (it == faces_.begin()) return 0;
    const std::size_t j = static_cast<std::size_t>(it - faces_.begin()) - 1;
    return std::min(j, num_cells() - 1);
}

void Field::validate(double tol) const {
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!std::isfinite(u[j])) {
            throw NumericError("non-finite density in cell " + std::to_string(j), static_cast<long>(j));
        }
        if (u[j] < -tol) {
            throw NumericError("negative density in cell " + std::to_string(j), static_cast<long>(j));
        }
    }
}

double Field::mass() const {
    const auto dx = mesh->widths();
    double m = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) m += u[j] * dx[j];
    return m;
}

double Field::max_value() const { return u.empty() ? 0.0 : *std::max_element(u.begin(), u.end()); }
double Field::min_value() const { return u.empty() ? 0.0 : *std::min_element(u.begin(), u.end()); }

namespace {

void append_uniform(std::vector<double>& faces, double a, double b, std::size_t n) {
    // faces already ends with a
    for (std::size_t k = 1; k <= n; ++k) {
        faces.push_back(k == n ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
    }
}

}  // namespace

std::shared_ptr<const Mesh> build_thin_mesh(double length, double epsilon, std::size_t n_membrane,
                                            std::size_t n_outer) {
    if (!(epsilon > 0.0)) throw GeometryError("epsilon must be > 0");
    if (!(length > epsilon)) throw GeometryError("membrane thickness must be smaller than the domain");
    if (n_membrane < kMinMembraneCells) {
        throw ConfigError("mesh.n_membrane", "at least " + std::to_string(kMinMembraneCells) + " membrane cells required");
    }
    if (n_outer < kMinOuterCells) {
        throw ConfigError("mesh.n_outer", "at least " + std::to_string(kMinOuterCells) + " outer cells required");
    }
    const double h = 0.5 * length;
    const double e = 0.5 * epsilon;
    std::vector<double> faces{-h};
    append_uniform(faces, -h, -e, n_outer);
    append_uniform(faces, -e, e, n_membrane);
    append_uniform(faces, e, h, n_outer);
    std::vector<Region> tags;
    tags.insert(tags.end(), n_outer, Region::Left);
    tags.insert(tags.end(), n_membrane, Region::Membrane);
    tags.insert(tags.end(), n_outer, Region::Right);
    std::vector<std::size_t> iface{n_outer, n_outer + n_membrane};
    return std::make_shared<const Mesh>(std::move(faces), std::move(tags), MeshKind::ThinLayer,
                                        std::move(iface), epsilon);
}

std::shared_ptr<const Mesh> build_effective_mesh(double length, std::size_t n_side) {
    if (!(length > 0.0)) throw GeometryError("domain length must be > 0");
    if (n_side < kMinSideCells) {
        throw ConfigError("mesh.n_side", "at least " + std::to_string(kMinSideCells) + " cells per side required");
    }
    const double h = 0.5 * length;
    std::vector<double> faces{-h};
    append_uniform(faces, -h, 0.0, n_side);
    faces.back() = 0.0;
    // mirror the left half so centers come in exact ± pairs
    for (std::size_t k = 1; k <= n_side; ++k) faces.push_back(-faces[n_side - k]);
    std::vector<Region> tags;
    tags.insert(tags.end(), n_side, Region::Left);
    tags.insert(tags.end(), n_side, Region::Right);
    return std::make_shared<const Mesh>(std::move(faces), std::move(tags), MeshKind::Effective,
                                        std::vector<std::size_t>{n_side});
}

std::vector<double> mobility_per_cell(const Mesh& mesh, const MobilityRealization& real) {
    if (mesh.kind() == MeshKind::Effective) {
        throw UsageError("mobility_per_cell: effective mesh has no membrane; use effective_mobility_per_cell");
    }
    std::vector<double> mu(mesh.num_cells());
    const auto tags = mesh.regions();
    for (std::size_t j = 0; j < mu.size(); ++j) {
        switch (tags[j]) {
            case Region::Left: mu[j] = real.mu1_eps; break;
            case Region::Membrane: mu[j] = real.mu2_eps; break;
            case Region::Right: mu[j] = real.mu3_eps; break;
        }
    }
    return mu;
}

std::vector<double> effective_mobility_per_cell(const Mesh& mesh, const ModelParams& params) {
    if (mesh.kind() != MeshKind::Effective) {
        throw UsageError("effective_mobility_per_cell: effective mesh required");
    }
    std::vector<double> mu(mesh.num_cells());
    const auto tags = mesh.regions();
    for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = tags[j] == Region::Left ? params.mu1 : params.mu3;
    return mu;
}

}  // namespace membrane_pme
