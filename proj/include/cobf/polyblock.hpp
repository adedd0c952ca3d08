#pragma once

#include <functional>
#include <vector>

#include "cobf/linalg.hpp"

namespace cobf {

using Vertex = RVec;
using VertexSet = std::vector<Vertex>;

/// Signed membership margin of a normal set; x is a member when the margin
/// is >= -kMembershipTol.
using MembershipOracle = std::function<double(const Vertex&)>;
using Objective = std::function<double(const Vertex&)>;

inline constexpr double kMembershipTol = 1e-12;

/// a <= b componentwise.
bool dominated_by(const Vertex& a, const Vertex& b);

/// Index of the vertex maximizing f; ties go to the lexicographically largest.
std::size_t select_best_vertex(const VertexSet& v, const Objective& f);

struct RayPoint {
    double beta = 0.0;    // largest known member multiplier
    double beta_hi = 0.0; // smallest known non-member multiplier (or the cap)
    Vertex point;         // beta * v
};

/// sup{ beta : beta v in D and beta v <= box_cap } by bisection on the oracle
/// sign, to relative tolerance `tol`. The bracket starts at
/// [0, min_i box_cap_i / v_i].
RayPoint ray_intersection(const Vertex& v, const MembershipOracle& oracle, const Vertex& box_cap,
                          double tol);

/// The N vertices v* - (v*_i - ṽ_i) e_i.
VertexSet new_vertices(const Vertex& best, const Vertex& boundary);

/// Drop `best` from `v`, add `fresh`, then prune dominated and duplicate vertices.
VertexSet update_vertex_set(const VertexSet& v, const Vertex& best, const VertexSet& fresh);

struct PoaIteration {
    Vertex best;
    Vertex boundary;
    Vertex incumbent;
    double upper = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    std::size_t vertex_count = 0;
};

enum class PoaStatus { Converged, MaxIterations, Stalled };

struct PoaOptions {
    double delta = 1e-3;
    int max_iterations = 200;
    double ray_tol = 1e-6;
};

struct PoaResult {
    std::vector<PoaIteration> trace;
    PoaStatus status = PoaStatus::MaxIterations;
    double upper = 0.0;
    double lower = 0.0;
    Vertex incumbent;
    VertexSet vertices;
};

/// Boundary search along the segment [0, v]: returns multipliers in [0, 1]
/// with beta v in D and beta_hi v outside D (or beta_hi = 1).
using RayFunction = std::function<RayPoint(const Vertex& v)>;

/// Polyblock outer approximation of max f over D ∩ [0, initial].
PoaResult run_poa(const Objective& f, const MembershipOracle& oracle, const Vertex& initial,
                  const PoaOptions& opts = {});

/// Same, with a caller-supplied boundary search (opts.ray_tol unused).
PoaResult run_poa(const Objective& f, const RayFunction& ray, const Vertex& initial,
                  const PoaOptions& opts = {});

} // namespace cobf
