#include "cobf/polyblock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cobf/error.hpp"

namespace cobf {

bool dominated_by(const Vertex& a, const Vertex& b)
{
    return (a.array() <= b.array()).all();
}

std::size_t select_best_vertex(const VertexSet& v, const Objective& f)
{
    if (v.empty()) {
        throw InvalidArgument("select_best_vertex: empty vertex set");
    }
    std::size_t best = 0;
    double best_val = f(v[0]);
    for (std::size_t k = 1; k < v.size(); ++k) {
        const double val = f(v[k]);
        if (val > best_val ||
            (val == best_val && std::lexicographical_compare(v[best].begin(), v[best].end(),
                                                             v[k].begin(), v[k].end()))) {
            best = k;
            best_val = val;
        }
    }
    return best;
}

RayPoint ray_intersection(const Vertex& v, const MembershipOracle& oracle, const Vertex& box_cap,
                          double tol)
{
    if (v.size() != box_cap.size()) {
        throw DimensionMismatch("ray_intersection: cap dimension differs");
    }
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) > 0) {
            hi = std::min(hi, box_cap(i) / v(i));
        }
    }
    if (!std::isfinite(hi)) {
        throw InvalidArgument("ray_intersection: direction must be nonzero");
    }
    RayPoint r;
    if (oracle(hi * v) >= -kMembershipTol) {
        r.beta = r.beta_hi = hi;
        r.point = hi * v;
        return r;
    }
    double lo = 0.0;
    const double width = tol * hi;
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (oracle(mid * v) >= -kMembershipTol) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r.beta = lo;
    r.beta_hi = hi;
    r.point = lo * v;
    return r;
}

VertexSet new_vertices(const Vertex& best, const Vertex& boundary)
{
    if (best.size() != boundary.size()) {
        throw DimensionMismatch("new_vertices: dimension differs");
    }
    if (!dominated_by(boundary, best)) {
        throw InvalidArgument("new_vertices: boundary point must lie below the vertex");
    }
    VertexSet out;
    for (Eigen::Index i = 0; i < best.size(); ++i) {
        Vertex u = best;
        u(i) = boundary(i);
        out.push_back(std::move(u));
    }
    return out;
}

VertexSet update_vertex_set(const VertexSet& v, const Vertex& best, const VertexSet& fresh)
{
    VertexSet all;
    bool removed = false;
    for (const Vertex& x : v) {
        if (!removed && x == best) {
            removed = true;
            continue;
        }
        all.push_back(x);
    }
    all.insert(all.end(), fresh.begin(), fresh.end());

    VertexSet out;
    for (std::size_t a = 0; a < all.size(); ++a) {
        bool keep = true;
        for (std::size_t b = 0; b < all.size() && keep; ++b) {
            if (a == b || !dominated_by(all[a], all[b])) {
                continue;
            }
            // strict domination, or an exact duplicate with a lower index
            keep = all[a] == all[b] && a < b;
        }
        if (keep) {
            out.push_back(all[a]);
        }
    }
    return out;
}

PoaResult run_poa(const Objective& f, const MembershipOracle& oracle, const Vertex& initial,
                  const PoaOptions& opts)
{
    // best <= initial, so capping the ray at best keeps it inside the box
    const RayFunction ray = [&](const Vertex& v) {
        return ray_intersection(v, oracle, v, opts.ray_tol);
    };
    return run_poa(f, ray, initial, opts);
}

PoaResult run_poa(const Objective& f, const RayFunction& ray_fn, const Vertex& initial,
                  const PoaOptions& opts)
{
    if ((initial.array() < 0).any()) {
        throw InvalidArgument("run_poa: initial vertex must be nonnegative");
    }
    PoaResult res;
    res.vertices = {initial};
    res.incumbent = Vertex::Zero(initial.size());
    res.lower = f(res.incumbent);
    const double scale = std::max(initial.maxCoeff(), 1e-300);

    for (int n = 0;; ++n) {
        const std::size_t k = select_best_vertex(res.vertices, f);
        const Vertex best = res.vertices[k];
        PoaIteration it;
        it.best = best;
        it.upper = f(best);
        it.vertex_count = res.vertices.size();

        RayPoint ray;
        if (best.maxCoeff() > 0) {
            ray = ray_fn(best);
            if (!(ray.beta >= 0 && ray.beta <= ray.beta_hi && ray.beta_hi <= 1.0)) {
                throw SolverFailure("run_poa: boundary search returned an invalid bracket");
            }
            ray.point = ray.beta * best;
        } else {
            ray.point = best;
        }
        it.boundary = ray.point;
        const double cand = f(ray.point);
        if (cand > res.lower) {
            res.lower = cand;
            res.incumbent = ray.point;
        }
        it.incumbent = res.incumbent;
        it.lower = res.lower;
        it.gap = std::max(0.0, it.upper - it.lower);
        res.trace.push_back(it);
        res.upper = it.upper;

        if (it.gap <= opts.delta) {
            res.status = PoaStatus::Converged;
            break;
        }
        if (n + 1 >= opts.max_iterations) {
            res.status = PoaStatus::MaxIterations;
            break;
        }
        const Vertex cut = ray.beta_hi * best;
        if (((best - cut).array() < 1e-12 * scale).all()) {
            res.status = PoaStatus::Stalled;
            break;
        }
        res.vertices = update_vertex_set(res.vertices, best, new_vertices(best, cut));
    }
    return res;
}

} // namespace cobf
