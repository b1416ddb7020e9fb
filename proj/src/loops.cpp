#include "magwaist/loops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "magwaist/errors.hpp"

namespace magwaist {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

long floor_div(long a, long n) { return a >= 0 ? a / n : -((-a + n - 1) / n); }

double cross2(const Vec2& a, const Vec2& b) { return a(0) * b(1) - a(1) * b(0); }

Eigen::Vector2i round_to_lattice(const SurfaceModel& s, const Vec2& d) {
    Eigen::Vector2i w = Eigen::Vector2i::Zero();
    const Vec2 per = s.periods();
    for (int i = 0; i < 2; ++i)
        if (per(i) > 0.0) w(i) = static_cast<int>(std::lround(d(i) / per(i)));
    return w;
}

// Closest point on segment p + t·r (t ∈ [0,1]) to x.
double closest_param(const Vec2& p, const Vec2& r, const Vec2& x) {
    const double rr = r.squaredNorm();
    if (rr <= 0.0) return 0.0;
    return std::clamp((x - p).dot(r) / rr, 0.0, 1.0);
}

double point_segment_distance(const Vec2& p, const Vec2& r, const Vec2& x) {
    return (p + closest_param(p, r, x) * r - x).norm();
}

struct SegContact {
    bool proper = false;
    double t = 0.0;
    double u = 0.0;
    double dist = 0.0;
};

// Segment p→p+r against q→q+w. A proper crossing has both parameters at
// least `margin_*` away from the endpoints; otherwise the closest pair of
// points is reported.
SegContact segment_contact(const Vec2& p, const Vec2& r, const Vec2& q, const Vec2& w,
                           double margin_r, double margin_w) {
    SegContact c;
    const double denom = cross2(r, w);
    const Vec2 qp = q - p;
    if (std::abs(denom) > 1e-14 * r.norm() * w.norm()) {
        const double t = cross2(qp, w) / denom;
        const double u = cross2(qp, r) / denom;
        if (t > margin_r && t < 1.0 - margin_r && u > margin_w && u < 1.0 - margin_w) {
            c.proper = true;
            c.t = t;
            c.u = u;
            c.dist = 0.0;
            return c;
        }
        if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) {
            c.t = t;
            c.u = u;
            c.dist = 0.0;
            return c;
        }
    }
    c.dist = std::numeric_limits<double>::infinity();
    auto consider = [&](double t, double u) {
        const double d = (p + t * r - q - u * w).norm();
        if (d < c.dist) {
            c.dist = d;
            c.t = t;
            c.u = u;
        }
    };
    consider(0.0, closest_param(q, w, p));
    consider(1.0, closest_param(q, w, p + r));
    consider(closest_param(p, r, q), 0.0);
    consider(closest_param(p, r, q + w), 1.0);
    return c;
}

double segment_segment_distance(const Vec2& p, const Vec2& r, const Vec2& q, const Vec2& w) {
    return segment_contact(p, r, q, w, 0.0, 0.0).dist;
}

// Loop with explicit per-segment durations, used by the surgery routines.
struct Timed {
    std::vector<Vec2> v;
    std::vector<double> dur;
    Vec2 shift = Vec2::Zero();
    Eigen::Vector2i winding = Eigen::Vector2i::Zero();

    long n() const { return static_cast<long>(v.size()); }
    Vec2 lift(long k) const {
        const long q = floor_div(k, n());
        return v[static_cast<std::size_t>(k - q * n())] + static_cast<double>(q) * shift;
    }
    double duration(long k) const {
        const long q = floor_div(k, n());
        return dur[static_cast<std::size_t>(k - q * n())];
    }
};

Timed to_timed(const SurfaceModel& s, const LoopPath& loop) {
    Timed t;
    t.v = loop.samples;
    t.dur.resize(loop.samples.size());
    for (int k = 0; k < loop.size(); ++k) t.dur[static_cast<std::size_t>(k)] = loop.weight(k) * loop.period;
    t.winding = loop.winding;
    t.shift = s.lattice_shift(loop.winding);
    return t;
}

LoopPath from_timed(const Timed& t) {
    LoopPath out;
    out.samples = t.v;
    out.winding = t.winding;
    out.period = std::accumulate(t.dur.begin(), t.dur.end(), 0.0);
    out.weights.resize(t.dur.size());
    for (std::size_t k = 0; k < t.dur.size(); ++k) out.weights[k] = t.dur[k] / out.period;
    return out;
}

// Merges vertices closer than `min_len` into their predecessor; the removed
// segment's duration goes to the following segment.
void drop_short_segments(Timed& t, double min_len) {
    bool changed = true;
    while (changed && t.n() > 3) {
        changed = false;
        for (long k = 0; k < t.n(); ++k) {
            const Vec2 d = t.lift(k + 1) - t.lift(k);
            if (d.norm() >= min_len) continue;
            // Remove vertex k+1 (keeping vertex 0 in place when possible).
            const long kill = (k + 1) % t.n();
            if (kill == 0) {
                // Drop vertex k instead; its incoming segment absorbs the time.
                const long prev = (k - 1 + t.n()) % t.n();
                t.dur[static_cast<std::size_t>(prev)] += t.dur[static_cast<std::size_t>(k)];
                t.v.erase(t.v.begin() + k);
                t.dur.erase(t.dur.begin() + k);
            } else {
                t.dur[static_cast<std::size_t>(k)] += t.dur[static_cast<std::size_t>(kill)];
                t.v.erase(t.v.begin() + kill);
                t.dur.erase(t.dur.begin() + kill);
            }
            changed = true;
            break;
        }
    }
}

struct Walk {
    std::vector<Vec2> v;
    std::vector<double> dur;
};

// Sub-path of t from parameter position (a, ta) to (b, tb) with b an
// absolute (possibly ≥ N) segment index and (b, tb) after (a, ta).
Walk walk(const Timed& t, long a, double ta, long b, double tb) {
    Walk w;
    const Vec2 start = t.lift(a) + ta * (t.lift(a + 1) - t.lift(a));
    w.v.push_back(start);
    w.dur.push_back((1.0 - ta) * t.duration(a));
    for (long k = a + 1; k <= b; ++k) {
        w.v.push_back(t.lift(k));
        w.dur.push_back(k < b ? t.duration(k) : tb * t.duration(b));
    }
    if (tb <= 1e-15) {
        w.v.pop_back();
        w.dur.pop_back();
    }
    return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// LoopPath

Vec2 LoopPath::point(const SurfaceModel& s, long k) const {
    const long n = static_cast<long>(samples.size());
    const long q = floor_div(k, n);
    return samples[static_cast<std::size_t>(k - q * n)] +
           static_cast<double>(q) * s.lattice_shift(winding);
}

double LoopPath::parameter(int k) const {
    if (weights.empty()) return static_cast<double>(k) / static_cast<double>(samples.size());
    double acc = 0.0;
    for (int i = 0; i < k; ++i) acc += weights[static_cast<std::size_t>(i)];
    return acc;
}

void LoopPath::validate(const SurfaceModel& s, double period_floor) const {
    if (size() < kMinSamples) throw std::invalid_argument("loop has fewer than 8 samples");
    if (!std::isfinite(period) || period < period_floor)
        throw std::invalid_argument("loop period below the floor");
    for (const Vec2& q : samples)
        if (!std::isfinite(q(0)) || !std::isfinite(q(1)))
            throw std::invalid_argument("non-finite sample");
    if (!weights.empty()) {
        if (weights.size() != samples.size()) throw std::invalid_argument("weight count mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw std::invalid_argument("non-positive segment weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("weights do not sum to one");
    }
    if (s.is_sphere() && winding(1) != 0)
        throw std::invalid_argument("sphere loops cannot wind in z");
    const Vec2 closing = point(s, size()) - samples.back();
    const Vec2 shortest = s.periodic_delta(samples.back(), samples.front());
    if ((closing - shortest).norm() > 1e-9 * (1.0 + closing.norm()))
        throw std::invalid_argument("closing displacement inconsistent with the winding");
}

// ---------------------------------------------------------------------------
// Builders

LoopPath latitude_loop(const SurfaceModel& s, double height, int direction, int n, double speed) {
    if (n < kMinSamples) throw std::invalid_argument("need at least 8 samples");
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be ±1");
    if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
    LoopPath loop;
    loop.samples.resize(static_cast<std::size_t>(n));
    loop.winding = Eigen::Vector2i(direction, 0);
    if (s.is_torus()) {
        for (int k = 0; k < n; ++k)
            loop.samples[static_cast<std::size_t>(k)] = Vec2(direction * double(k) / n, height);
        loop.period = 1.0 / speed;
    } else {
        s.require_admissible(Vec2(0.0, height));
        for (int k = 0; k < n; ++k)
            loop.samples[static_cast<std::size_t>(k)] = Vec2(direction * kTwoPi * k / n, height);
        loop.period = kTwoPi * std::sqrt(1.0 - height * height) / speed;
    }
    return loop;
}

LoopPath longitude_loop(const SurfaceModel& s, double position, int direction, int n,
                        double speed) {
    if (!s.is_torus()) throw std::invalid_argument("longitude loops exist only on the torus");
    if (n < kMinSamples) throw std::invalid_argument("need at least 8 samples");
    LoopPath loop;
    loop.samples.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        loop.samples[static_cast<std::size_t>(k)] = Vec2(position, direction * double(k) / n);
    loop.winding = Eigen::Vector2i(0, direction);
    loop.period = 1.0 / speed;
    return loop;
}

LoopPath chart_circle(const Vec2& center, double radius, int n, bool ccw, double period) {
    if (n < kMinSamples) throw std::invalid_argument("need at least 8 samples");
    LoopPath loop;
    loop.samples.resize(static_cast<std::size_t>(n));
    const double sgn = ccw ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k) {
        const double a = kTwoPi * k / n;
        loop.samples[static_cast<std::size_t>(k)] =
            center + radius * Vec2(std::cos(a), sgn * std::sin(a));
    }
    loop.period = period;
    return loop;
}

Multicurve make_multicurve(const SurfaceModel& s, std::vector<LoopPath> components) {
    Multicurve mc;
    mc.components = std::move(components);
    mc.homology = homology_class(s, mc);
    return mc;
}

// ---------------------------------------------------------------------------
// Resampling

LoopPath resample_uniform(const SurfaceModel& s, const LoopPath& loop, int n) {
    if (n < kMinSamples) throw std::invalid_argument("need at least 8 samples");
    if (n == loop.size() && loop.uniform()) return loop;
    const int m = loop.size();
    std::vector<double> param(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k < m; ++k) param[static_cast<std::size_t>(k) + 1] = param[static_cast<std::size_t>(k)] + loop.weight(k);
    const double total = param.back();
    LoopPath out;
    out.period = loop.period;
    out.winding = loop.winding;
    out.samples.resize(static_cast<std::size_t>(n));
    int k = 0;
    for (int j = 0; j < n; ++j) {
        const double u = total * j / n;
        while (k < m - 1 && param[static_cast<std::size_t>(k) + 1] <= u) ++k;
        const double len = param[static_cast<std::size_t>(k) + 1] - param[static_cast<std::size_t>(k)];
        const double f = len > 0.0 ? (u - param[static_cast<std::size_t>(k)]) / len : 0.0;
        out.samples[static_cast<std::size_t>(j)] =
            loop.point(s, k) + f * (loop.point(s, k + 1) - loop.point(s, k));
    }
    return out;
}

LoopPath equalize_arclength(const SurfaceModel& s, const LoopPath& loop, int n) {
    if (n < kMinSamples) throw std::invalid_argument("need at least 8 samples");
    const int m = loop.size();
    std::vector<double> arc(static_cast<std::size_t>(m) + 1, 0.0);
    for (int k = 0; k < m; ++k)
        arc[static_cast<std::size_t>(k) + 1] = arc[static_cast<std::size_t>(k)] + loop.segment(s, k).norm();
    const double total = arc.back();
    if (!(total > 0.0)) return resample_uniform(s, loop, n);
    LoopPath out;
    out.period = loop.period;
    out.winding = loop.winding;
    out.samples.resize(static_cast<std::size_t>(n));
    int k = 0;
    for (int j = 0; j < n; ++j) {
        const double u = total * j / n;
        while (k < m - 1 && arc[static_cast<std::size_t>(k) + 1] <= u) ++k;
        const double len = arc[static_cast<std::size_t>(k) + 1] - arc[static_cast<std::size_t>(k)];
        const double f = len > 0.0 ? (u - arc[static_cast<std::size_t>(k)]) / len : 0.0;
        out.samples[static_cast<std::size_t>(j)] =
            loop.point(s, k) + f * (loop.point(s, k + 1) - loop.point(s, k));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Homology

Eigen::VectorXi homology_class(const SurfaceModel& s, const LoopPath& loop) {
    if (s.homology_rank() == 0) return Eigen::VectorXi(0);
    const Vec2 closing = loop.point(s, loop.size()) - loop.samples.back();
    const Vec2 shortest = s.periodic_delta(loop.samples.back(), loop.samples.front());
    const Vec2 per = s.periods();
    double residual = 0.0;
    for (int i = 0; i < 2; ++i) {
        if (!std::isfinite(closing(i))) residual = std::numeric_limits<double>::infinity();
        else residual = std::max(residual, std::abs(closing(i) - shortest(i)) / per(i));
    }
    if (!(residual <= 0.1)) {
        std::ostringstream os;
        os << "winding residual " << residual << " exceeds 0.1";
        throw WindingResidualError(os.str());
    }
    Eigen::VectorXi h(2);
    h << loop.winding(0), loop.winding(1);
    return h;
}

Eigen::VectorXi homology_class(const SurfaceModel& s, const Multicurve& mc) {
    Eigen::VectorXi h = Eigen::VectorXi::Zero(s.homology_rank());
    for (const LoopPath& c : mc.components) h += homology_class(s, c);
    return h;
}

// ---------------------------------------------------------------------------
// Self-intersections

namespace {

struct HashedSeg {
    int comp;
    int idx;
    Vec2 a;  // reduced start
    Vec2 d;  // displacement
};

struct Event {
    int ci, a, cj, b;
    double ta, tb;
    bool proper;
    double dist;
    Vec2 loc;
    Eigen::Vector2i shift;
};

int cyclic_gap(int x, int y, int n) {
    const int d = std::abs(x - y) % n;
    return std::min(d, n - d);
}

// Points on a branch leaving a ball of radius `r` around c, walking backward
// from vertex `from_back` and forward from vertex `from_fwd`.
std::pair<Vec2, Vec2> branch_rays(const SurfaceModel& s, const LoopPath& loop, long from_back,
                                  long from_fwd, const Vec2& c, const Vec2& offset, double r) {
    const long n = loop.size();
    Vec2 in = loop.point(s, from_back) - offset;
    for (long k = from_back, steps = 0; steps < n; --k, ++steps) {
        in = loop.point(s, k) - offset;
        if ((in - c).norm() > r) break;
    }
    Vec2 out = loop.point(s, from_fwd) - offset;
    for (long k = from_fwd, steps = 0; steps < n; ++k, ++steps) {
        out = loop.point(s, k) - offset;
        if ((out - c).norm() > r) break;
    }
    return {in, out};
}

bool angle_in_ccw_arc(double from, double to, double x) {
    auto norm = [](double a) {
        a = std::fmod(a, kTwoPi);
        return a < 0.0 ? a + kTwoPi : a;
    };
    const double span = norm(to - from);
    const double off = norm(x - from);
    return off > 0.0 && off < span;
}

}  // namespace

std::vector<CrossingRecord> self_intersections(const SurfaceModel& s, const Multicurve& mc,
                                               double snap) {
    std::vector<HashedSeg> segs;
    double max_len = 0.0;
    for (int c = 0; c < static_cast<int>(mc.components.size()); ++c) {
        const LoopPath& loop = mc.components[static_cast<std::size_t>(c)];
        for (int k = 0; k < loop.size(); ++k) {
            const Vec2 p = loop.point(s, k);
            const Vec2 d = loop.point(s, k + 1) - p;
            const double len = d.norm();
            if (len < 2.0 * snap) {
                std::ostringstream os;
                os << "segment " << k << " of component " << c << " has length " << len
                   << " < 2·snap";
                throw DegenerateSegmentError(os.str());
            }
            max_len = std::max(max_len, len);
            segs.push_back({c, k, s.reduce(p), d});
        }
    }
    if (segs.empty()) return {};

    const Vec2 origin = s.domain_origin();
    const Vec2 extent = s.domain_extent();
    const Vec2 per = s.periods();
    const double cell = max_len + 2.0 * snap;
    int nc[2];
    for (int i = 0; i < 2; ++i)
        nc[i] = std::clamp(static_cast<int>(std::floor(extent(i) / cell)), 1, 512);
    const Vec2 cw(extent(0) / nc[0], extent(1) / nc[1]);
    std::vector<std::vector<int>> grid(static_cast<std::size_t>(nc[0]) * nc[1]);
    for (int id = 0; id < static_cast<int>(segs.size()); ++id) {
        const HashedSeg& sg = segs[static_cast<std::size_t>(id)];
        const Vec2 lo = sg.a.cwiseMin(sg.a + sg.d) - Vec2::Constant(snap);
        const Vec2 hi = sg.a.cwiseMax(sg.a + sg.d) + Vec2::Constant(snap);
        int r0[2], r1[2];
        for (int i = 0; i < 2; ++i) {
            r0[i] = static_cast<int>(std::floor((lo(i) - origin(i)) / cw(i)));
            r1[i] = static_cast<int>(std::floor((hi(i) - origin(i)) / cw(i)));
            if (per(i) > 0.0) {
                r1[i] = std::min(r1[i], r0[i] + nc[i] - 1);
            } else {
                r0[i] = std::clamp(r0[i], 0, nc[i] - 1);
                r1[i] = std::clamp(r1[i], 0, nc[i] - 1);
            }
        }
        for (int ix = r0[0]; ix <= r1[0]; ++ix)
            for (int iy = r0[1]; iy <= r1[1]; ++iy) {
                const int gx = ((ix % nc[0]) + nc[0]) % nc[0];
                const int gy = ((iy % nc[1]) + nc[1]) % nc[1];
                grid[static_cast<std::size_t>(gy) * nc[0] + gx].push_back(id);
            }
    }

    std::vector<std::uint64_t> pairs;
    for (const auto& bucket : grid)
        for (std::size_t x = 0; x < bucket.size(); ++x)
            for (std::size_t y = x + 1; y < bucket.size(); ++y) {
                int p = bucket[x], q = bucket[y];
                if (p > q) std::swap(p, q);
                pairs.push_back((static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint32_t>(q));
            }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    std::vector<Event> events;
    for (std::uint64_t key : pairs) {
        const HashedSeg& s1 = segs[static_cast<std::size_t>(key >> 32)];
        const HashedSeg& s2 = segs[static_cast<std::size_t>(key & 0xffffffffu)];
        if (s1.comp == s2.comp) {
            const int n = mc.components[static_cast<std::size_t>(s1.comp)].size();
            if (cyclic_gap(s1.idx, s2.idx, n) <= 1) continue;
        }
        const Vec2 base = s1.a + s.periodic_delta(s1.a, s2.a);
        const double m1 = 2.0 * snap / s1.d.norm();
        const double m2 = 2.0 * snap / s2.d.norm();
        for (int ox = -1; ox <= 1; ++ox)
            for (int oy = -1; oy <= 1; ++oy) {
                if ((ox != 0 && per(0) <= 0.0) || (oy != 0 && per(1) <= 0.0)) continue;
                const Vec2 q = base + Vec2(ox * per(0), oy * per(1));
                const Vec2 lo1 = s1.a.cwiseMin(s1.a + s1.d), hi1 = s1.a.cwiseMax(s1.a + s1.d);
                const Vec2 lo2 = q.cwiseMin(q + s2.d), hi2 = q.cwiseMax(q + s2.d);
                if ((lo1.array() > hi2.array() + snap).any() || (lo2.array() > hi1.array() + snap).any())
                    continue;
                const SegContact sc = segment_contact(s1.a, s1.d, q, s2.d, m1, m2);
                if (!sc.proper && !(sc.dist < snap)) continue;
                Event e;
                bool flip = std::make_pair(s1.comp, s1.idx) > std::make_pair(s2.comp, s2.idx);
                const HashedSeg& f = flip ? s2 : s1;
                const HashedSeg& g = flip ? s1 : s2;
                e.ci = f.comp;
                e.a = f.idx;
                e.ta = flip ? sc.u : sc.t;
                e.cj = g.comp;
                e.b = g.idx;
                e.tb = flip ? sc.t : sc.u;
                e.proper = sc.proper;
                e.dist = sc.dist;
                const LoopPath& li = mc.components[static_cast<std::size_t>(e.ci)];
                const LoopPath& lj = mc.components[static_cast<std::size_t>(e.cj)];
                e.loc = li.point(s, e.a) + e.ta * li.segment(s, e.a);
                const Vec2 other = lj.point(s, e.b) + e.tb * lj.segment(s, e.b);
                e.shift = round_to_lattice(s, other - e.loc);
                events.push_back(e);
            }
    }
    if (events.empty()) return {};

    // Cluster events that describe the same contact.
    const std::size_t ne = events.size();
    std::vector<std::size_t> parent(ne);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t x = 0; x < ne; ++x)
        for (std::size_t y = x + 1; y < ne; ++y) {
            const Event& e = events[x];
            const Event& f = events[y];
            if (e.ci != f.ci || e.cj != f.cj) continue;
            if (e.proper && f.proper) continue;
            if (s.periodic_delta(e.loc, f.loc).norm() > 2.0 * cell) continue;
            const int ni = mc.components[static_cast<std::size_t>(e.ci)].size();
            const int nj = mc.components[static_cast<std::size_t>(e.cj)].size();
            const bool same = cyclic_gap(e.a, f.a, ni) <= 2 && cyclic_gap(e.b, f.b, nj) <= 2;
            const bool swapped = e.ci == e.cj && cyclic_gap(e.a, f.b, ni) <= 2 &&
                                 cyclic_gap(e.b, f.a, ni) <= 2;
            if (same || swapped) parent[find(x)] = find(y);
        }
    std::vector<std::vector<std::size_t>> clusters;
    {
        std::vector<long> slot(ne, -1);
        for (std::size_t x = 0; x < ne; ++x) {
            const std::size_t r = find(x);
            if (slot[r] < 0) {
                slot[r] = static_cast<long>(clusters.size());
                clusters.emplace_back();
            }
            clusters[static_cast<std::size_t>(slot[r])].push_back(x);
        }
    }

    const double sin_tol = std::sin(kTangencyAngleDeg * std::numbers::pi / 180.0);
    std::vector<CrossingRecord> out;
    auto to_record = [](const Event& e, CrossingType type) {
        CrossingRecord r;
        r.component_i = e.ci;
        r.segment_a = e.a;
        r.t_a = e.ta;
        r.component_j = e.cj;
        r.segment_b = e.b;
        r.t_b = e.tb;
        r.type = type;
        r.location = e.loc;
        r.shift_ij = e.shift;
        return r;
    };
    for (const auto& cl : clusters) {
        bool any_proper = false;
        for (std::size_t x : cl)
            if (events[x].proper) {
                out.push_back(to_record(events[x], CrossingType::Transverse));
                any_proper = true;
            }
        if (any_proper) continue;
        const Event& rep = events[*std::min_element(
            cl.begin(), cl.end(),
            [&](std::size_t x, std::size_t y) { return events[x].dist < events[y].dist; })];
        const LoopPath& li = mc.components[static_cast<std::size_t>(rep.ci)];
        const LoopPath& lj = mc.components[static_cast<std::size_t>(rep.cj)];
        const double r = 4.0 * snap;
        const auto [in_i, out_i] = branch_rays(s, li, rep.a, rep.a + 1, rep.loc, Vec2::Zero(), r);
        const auto [in_j, out_j] =
            branch_rays(s, lj, rep.b, rep.b + 1, rep.loc, s.lattice_shift(rep.shift), r);
        const Vec2 di = out_i - in_i;
        const Vec2 dj = out_j - in_j;
        CrossingType type = CrossingType::Tangency;
        if (std::abs(cross2(di, dj)) > sin_tol * di.norm() * dj.norm()) {
            auto ang = [&](const Vec2& p) { return std::atan2(p(1) - rep.loc(1), p(0) - rep.loc(0)); };
            const bool x3 = angle_in_ccw_arc(ang(in_i), ang(out_i), ang(in_j));
            const bool x4 = angle_in_ccw_arc(ang(in_i), ang(out_i), ang(out_j));
            if (x3 != x4) type = CrossingType::Transverse;
        }
        out.push_back(to_record(rep, type));
    }
    std::sort(out.begin(), out.end(), [](const CrossingRecord& x, const CrossingRecord& y) {
        if (x.component_i != y.component_i) return x.component_i < y.component_i;
        const double px = x.segment_a + x.t_a, py = y.segment_a + y.t_a;
        if (px != py) return px < py;
        if (x.component_j != y.component_j) return x.component_j < y.component_j;
        return x.segment_b + x.t_b < y.segment_b + y.t_b;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Rearrangement

namespace {

Multicurve assemble(const SurfaceModel& s, const std::vector<Timed>& loops) {
    std::vector<LoopPath> comps;
    comps.reserve(loops.size());
    for (const Timed& t : loops) comps.push_back(from_timed(t));
    return make_multicurve(s, std::move(comps));
}

bool jitter_near(const SurfaceModel& s, std::vector<Timed>& loops, const Vec2& where,
                 double radius, double amount) {
    bool moved = false;
    for (std::size_t c = 0; c < loops.size(); ++c)
        for (std::size_t k = 0; k < loops[c].v.size(); ++k) {
            if (s.periodic_delta(where, loops[c].v[k]).norm() > radius) continue;
            const double a = 2.399963229728653 * static_cast<double>(k + 7 * c + 1);
            loops[c].v[k] += amount * Vec2(std::cos(a), std::sin(a));
            moved = true;
        }
    return moved;
}

// Resolves one transverse double point by oriented smoothing.
void resolve(const SurfaceModel& s, std::vector<Timed>& loops, const CrossingRecord& rec,
             double snap) {
    const Vec2 c = rec.location;
    if (rec.component_i == rec.component_j) {
        Timed& t = loops[static_cast<std::size_t>(rec.component_i)];
        // Records are ordered, so branch a precedes branch b along the loop.
        const long a = rec.segment_a, b = rec.segment_b;
        const double ta = rec.t_a, tb = rec.t_b;
        const Vec2 lat = s.lattice_shift(rec.shift_ij);
        const Vec2 c_a = c;
        Walk wa = walk(t, a, ta, b, tb);
        Walk wb = walk(t, b, tb, a + t.n(), ta);
        wa.v.front() = c_a;
        wb.v.front() = c_a + lat;
        Timed la, lb;
        la.v = std::move(wa.v);
        la.dur = std::move(wa.dur);
        la.shift = lat;
        la.winding = round_to_lattice(s, lat);
        lb.v = std::move(wb.v);
        lb.dur = std::move(wb.dur);
        lb.shift = t.shift - lat;
        lb.winding = t.winding - la.winding;
        drop_short_segments(la, 3.0 * snap);
        drop_short_segments(lb, 3.0 * snap);
        const std::size_t idx = static_cast<std::size_t>(rec.component_i);
        loops[idx] = std::move(la);
        loops.insert(loops.begin() + static_cast<long>(idx) + 1, std::move(lb));
    } else {
        const Timed& ti = loops[static_cast<std::size_t>(rec.component_i)];
        const Timed& tj = loops[static_cast<std::size_t>(rec.component_j)];
        Walk wi = walk(ti, rec.segment_a, rec.t_a, rec.segment_a + ti.n(), rec.t_a);
        Walk wj = walk(tj, rec.segment_b, rec.t_b, rec.segment_b + tj.n(), rec.t_b);
        wi.v.front() = c;
        const Vec2 translate = ti.shift - s.lattice_shift(rec.shift_ij);
        Timed merged;
        merged.v = std::move(wi.v);
        merged.dur = std::move(wi.dur);
        for (std::size_t k = 0; k < wj.v.size(); ++k) {
            merged.v.push_back(k == 0 ? Vec2(c + ti.shift) : Vec2(wj.v[k] + translate));
            merged.dur.push_back(wj.dur[k]);
        }
        merged.shift = ti.shift + tj.shift;
        merged.winding = ti.winding + tj.winding;
        drop_short_segments(merged, 3.0 * snap);
        const std::size_t lo = static_cast<std::size_t>(std::min(rec.component_i, rec.component_j));
        const std::size_t hi = static_cast<std::size_t>(std::max(rec.component_i, rec.component_j));
        loops.erase(loops.begin() + static_cast<long>(hi));
        loops[lo] = std::move(merged);
    }
}

}  // namespace

Multicurve rearrange_double_points(const SurfaceModel& s, const Multicurve& mc,
                                   const RearrangeOptions& opts) {
    std::vector<Timed> loops;
    for (const LoopPath& c : mc.components) loops.push_back(to_timed(s, c));
    int jitter_rounds = 0;
    for (int iter = 0; iter < 100000; ++iter) {
        const Multicurve cur = assemble(s, loops);
        const auto records = self_intersections(s, cur, opts.snap);
        std::vector<CrossingRecord> transverse;
        for (const auto& r : records)
            if (r.type == CrossingType::Transverse) transverse.push_back(r);
        if (transverse.empty()) {
            Multicurve out = cur;
            out.embedded = records.empty();
            return out;
        }
        // Triple points: two transverse records at the same place.
        bool triple = false;
        Vec2 where;
        for (std::size_t x = 0; x < transverse.size() && !triple; ++x)
            for (std::size_t y = x + 1; y < transverse.size(); ++y)
                if (s.periodic_delta(transverse[x].location, transverse[y].location).norm() <
                    4.0 * opts.snap) {
                    triple = true;
                    where = transverse[x].location;
                    break;
                }
        if (triple) {
            if (!opts.jitter_triple_points || jitter_rounds >= 3)
                throw TriplePointError("three or more branches meet within snap");
            double radius = 0.0;
            for (const Timed& t : loops)
                for (long k = 0; k < t.n(); ++k)
                    radius = std::max(radius, (t.lift(k + 1) - t.lift(k)).norm());
            jitter_near(s, loops, where, 1.5 * radius, 10.0 * opts.snap);
            ++jitter_rounds;
            continue;
        }
        resolve(s, loops, transverse.front(), opts.snap);
    }
    throw TriplePointError("rearrangement did not terminate");
}

// ---------------------------------------------------------------------------
// Chamfer

namespace {

struct Interval {
    double lo, hi;
};

// Replaces the arclength windows of t by straight chords. Each chord lasts as
// long as the portion it replaces.
Timed cut_intervals(const Timed& t, std::vector<Interval> cuts, double margin) {
    const long n = t.n();
    std::vector<double> arc(static_cast<std::size_t>(n) + 1, 0.0), tim(static_cast<std::size_t>(n) + 1, 0.0);
    for (long k = 0; k < n; ++k) {
        arc[static_cast<std::size_t>(k) + 1] = arc[static_cast<std::size_t>(k)] + (t.lift(k + 1) - t.lift(k)).norm();
        tim[static_cast<std::size_t>(k) + 1] = tim[static_cast<std::size_t>(k)] + t.dur[static_cast<std::size_t>(k)];
    }
    const double total = arc.back(), period = tim.back();
    auto arc_of = [&](long k) {
        const long q = floor_div(k, n);
        return arc[static_cast<std::size_t>(k - q * n)] + q * total;
    };
    auto eval = [&](double pos) {
        const long q = static_cast<long>(std::floor(pos / total));
        const double r = pos - q * total;
        long k = static_cast<long>(std::upper_bound(arc.begin(), arc.end(), r) - arc.begin()) - 1;
        k = std::clamp<long>(k, 0, n - 1);
        const double len = arc[static_cast<std::size_t>(k) + 1] - arc[static_cast<std::size_t>(k)];
        const double f = len > 0.0 ? (r - arc[static_cast<std::size_t>(k)]) / len : 0.0;
        const Vec2 p = t.lift(k) + f * (t.lift(k + 1) - t.lift(k)) + static_cast<double>(q) * t.shift;
        const double time = tim[static_cast<std::size_t>(k)] + f * t.dur[static_cast<std::size_t>(k)] + q * period;
        return std::make_pair(p, time);
    };
    // Merge overlapping windows.
    std::sort(cuts.begin(), cuts.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    std::vector<Interval> merged;
    for (const Interval& c : cuts) {
        if (!merged.empty() && c.lo <= merged.back().hi) merged.back().hi = std::max(merged.back().hi, c.hi);
        else merged.push_back(c);
    }
    if (merged.size() > 1 && merged.back().hi - total >= merged.front().lo) {
        merged.front().lo = merged.back().lo - total;
        merged.front().hi = std::max(merged.front().hi, merged.back().hi - total);
        merged.pop_back();
    }
    auto inside = [&](double pos) {
        for (const Interval& c : merged)
            for (int q = -1; q <= 1; ++q)
                if (pos > c.lo + q * total && pos < c.hi + q * total) return true;
        return false;
    };
    // Vertices too close to a window would leave slivers next to the chord.
    auto blocked = [&](double pos) {
        if (inside(pos)) return true;
        for (const Interval& c : merged)
            for (int q = -1; q <= 1; ++q)
                if (std::abs(pos - c.lo - q * total) < margin || std::abs(pos - c.hi - q * total) < margin)
                    return true;
        return false;
    };
    long k0 = 0;
    while (k0 < n && blocked(arc_of(k0))) ++k0;
    if (k0 == n) throw EpsTooLargeError("chamfer windows cover the whole component");
    const double start = arc_of(k0);
    // Positions of every output vertex in [start, start + total).
    std::vector<double> pos;
    for (long k = k0; k < k0 + n; ++k)
        if (!blocked(arc_of(k))) pos.push_back(arc_of(k));
    for (const Interval& c : merged)
        for (int q = -1; q <= 2; ++q)
            for (double e : {c.lo + q * total, c.hi + q * total})
                if (e > start && e < start + total) pos.push_back(e);
    std::sort(pos.begin(), pos.end());
    Timed out;
    out.shift = t.shift;
    out.winding = t.winding;
    std::vector<double> times;
    for (double p : pos) {
        auto [pt, tm] = eval(p);
        out.v.push_back(pt);
        times.push_back(tm);
    }
    times.push_back(times.front() + period);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) out.dur.push_back(times[k + 1] - times[k]);
    return out;
}

}  // namespace

Multicurve chamfer(const SurfaceModel& s, const Multicurve& mc, double eps, double snap) {
    if (!(eps > 0.0)) throw EpsTooLargeError("eps must be positive");
    const auto records = self_intersections(s, mc, snap);
    if (records.empty()) {
        Multicurve out = mc;
        out.embedded = true;
        return out;
    }
    for (const auto& r : records)
        if (r.type == CrossingType::Transverse)
            throw PreconditionError("chamfer needs a multicurve whose only contacts are tangencies");

    const std::size_t m = mc.components.size();
    std::vector<std::vector<long>> corners(m);
    struct Push {
        int comp;
        Vec2 where;  // in the component's own lifted frame
        Vec2 normal;
    };
    std::vector<Push> pushes;
    const double vtol = std::max(2.0 * snap, 1e-12);
    auto shared_vertex = [&](const LoopPath& loop, int seg, double t, const Vec2& c) -> long {
        const long v = t < 0.5 ? seg : seg + 1;
        return (loop.point(s, v) - c).norm() <= vtol ? v % loop.size() : -1;
    };
    for (const auto& r : records) {
        const LoopPath& li = mc.components[static_cast<std::size_t>(r.component_i)];
        const LoopPath& lj = mc.components[static_cast<std::size_t>(r.component_j)];
        const Vec2 lat = s.lattice_shift(r.shift_ij);
        const long vi = shared_vertex(li, r.segment_a, r.t_a, r.location);
        const long vj = shared_vertex(lj, r.segment_b, r.t_b, r.location + lat);
        if (vi >= 0 && vj >= 0) {
            corners[static_cast<std::size_t>(r.component_i)].push_back(vi);
            corners[static_cast<std::size_t>(r.component_j)].push_back(vj);
            continue;
        }
        const Vec2 ti = li.segment(s, r.segment_a).normalized();
        Vec2 n(-ti(1), ti(0));
        Vec2 centroid = Vec2::Zero();
        for (int k = -3; k <= 4; ++k) centroid += lj.point(s, r.segment_b + k) - lat;
        centroid /= 8.0;
        if (n.dot(centroid - r.location) > 0.0) n = -n;
        pushes.push_back({r.component_i, r.location, n});
        pushes.push_back({r.component_j, r.location + lat, -n});
    }

    // eps must stay below half of every segment not touching a corner.
    double min_len = std::numeric_limits<double>::infinity();
    double max_len = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
        const LoopPath& loop = mc.components[c];
        auto& cs = corners[c];
        std::sort(cs.begin(), cs.end());
        cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
        for (int k = 0; k < loop.size(); ++k) {
            const double len = loop.segment(s, k).norm();
            max_len = std::max(max_len, len);
            const bool touches = std::binary_search(cs.begin(), cs.end(), long(k)) ||
                                 std::binary_search(cs.begin(), cs.end(), long((k + 1) % loop.size()));
            if (!touches) min_len = std::min(min_len, len);
        }
    }
    if (eps >= 0.5 * min_len) {
        std::ostringstream os;
        os << "eps = " << eps << " is not below half the minimum segment length " << min_len;
        throw EpsTooLargeError(os.str());
    }

    std::vector<Timed> loops;
    for (std::size_t c = 0; c < m; ++c) {
        Timed t = to_timed(s, mc.components[c]);
        if (!corners[c].empty()) {
            std::vector<double> arc(static_cast<std::size_t>(t.n()) + 1, 0.0);
            for (long k = 0; k < t.n(); ++k)
                arc[static_cast<std::size_t>(k) + 1] = arc[static_cast<std::size_t>(k)] + (t.lift(k + 1) - t.lift(k)).norm();
            std::vector<Interval> cuts;
            for (long v : corners[c]) {
                const Vec2 uin = (t.lift(v) - t.lift(v - 1)).normalized();
                const Vec2 uout = (t.lift(v + 1) - t.lift(v)).normalized();
                const double psi = std::acos(std::clamp(-uin.dot(uout), -1.0, 1.0));
                // Chord midpoint at eps/2 from the corner; sharp corners get a
                // longer cut so that the chord is not a sliver.
                const double c_half = std::max(std::cos(0.5 * psi), 1e-12);
                const double s_half = std::max(std::sin(0.5 * psi), 1e-12);
                const double hi = std::min(10.0 * eps, 0.95 * eps / c_half);
                const double delta = std::clamp(std::max(0.5 * eps / c_half, 0.3 * eps / s_half),
                                                0.5 * eps, std::max(hi, 0.5 * eps));
                const double at = arc[static_cast<std::size_t>(v)];
                cuts.push_back({at - delta, at + delta});
            }
            t = cut_intervals(t, std::move(cuts), eps);
        }
        loops.push_back(std::move(t));
    }
    const double radius = 3.0 * max_len;
    for (const Push& p : pushes) {
        Timed& t = loops[static_cast<std::size_t>(p.comp)];
        for (long k = 0; k < t.n(); ++k) {
            const Vec2 d = s.periodic_delta(p.where, t.v[static_cast<std::size_t>(k)]);
            const double dist = d.norm();
            if (dist >= radius) continue;
            const double w = 1.0 - dist / radius;
            t.v[static_cast<std::size_t>(k)] += 0.5 * eps * w * p.normal;
        }
    }
    Multicurve out = assemble(s, loops);
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& c : out.components)
        for (int k = 0; k < c.size(); ++k) shortest = std::min(shortest, c.segment(s, k).norm());
    out.embedded = self_intersections(s, out, std::min(0.25 * eps, 0.45 * shortest)).empty();
    return out;
}

// ---------------------------------------------------------------------------
// Distances

namespace {

double directed_hausdorff(const SurfaceModel& s, const std::vector<const LoopPath*>& a,
                          const std::vector<const LoopPath*>& b) {
    double worst = 0.0;
    for (const LoopPath* la : a)
        for (int k = 0; k < la->size(); ++k) {
            const Vec2 p0 = la->point(s, k);
            const Vec2 d = la->point(s, k + 1) - p0;
            for (int sub = 0; sub < 4; ++sub) {
                const Vec2 x = p0 + 0.25 * sub * d;
                double best = std::numeric_limits<double>::infinity();
                for (const LoopPath* lb : b) best = std::min(best, point_to_loop_distance(s, x, *lb));
                worst = std::max(worst, best);
            }
        }
    return worst;
}

}  // namespace

double point_to_loop_distance(const SurfaceModel& s, const Vec2& p, const LoopPath& loop) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < loop.size(); ++k) {
        const Vec2 q = loop.samples[static_cast<std::size_t>(k)];
        const Vec2 d = loop.point(s, k + 1) - loop.point(s, k);
        const Vec2 rel = s.periodic_delta(q, p);
        best = std::min(best, point_segment_distance(Vec2::Zero(), d, rel));
    }
    return best;
}

double hausdorff_distance(const SurfaceModel& s, const LoopPath& a, const LoopPath& b) {
    return std::max(directed_hausdorff(s, {&a}, {&b}), directed_hausdorff(s, {&b}, {&a}));
}

double hausdorff_distance(const SurfaceModel& s, const Multicurve& a, const Multicurve& b) {
    std::vector<const LoopPath*> pa, pb;
    for (const auto& c : a.components) pa.push_back(&c);
    for (const auto& c : b.components) pb.push_back(&c);
    return std::max(directed_hausdorff(s, pa, pb), directed_hausdorff(s, pb, pa));
}

double support_distance(const SurfaceModel& s, const LoopPath& a, const LoopPath& b) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < a.size(); ++i) {
        const Vec2 p = a.samples[static_cast<std::size_t>(i)];
        const Vec2 r = a.point(s, i + 1) - a.point(s, i);
        for (int j = 0; j < b.size(); ++j) {
            const Vec2 w = b.point(s, j + 1) - b.point(s, j);
            const Vec2 q = p + s.periodic_delta(p, b.samples[static_cast<std::size_t>(j)]);
            if ((q - p).norm() > r.norm() + w.norm() + best) continue;
            best = std::min(best, segment_segment_distance(p, r, q, w));
        }
    }
    return best;
}

double chart_length(const SurfaceModel& s, const LoopPath& loop) {
    double len = 0.0;
    for (int k = 0; k < loop.size(); ++k) len += loop.segment(s, k).norm();
    return len;
}

LoopPath reversed(const LoopPath& loop, const SurfaceModel& s) {
    LoopPath out;
    const int n = loop.size();
    out.period = loop.period;
    out.winding = -loop.winding;
    out.samples.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out.samples[static_cast<std::size_t>(k)] = loop.point(s, -k);
    if (!loop.uniform()) {
        out.weights.resize(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k)
            out.weights[static_cast<std::size_t>(k)] = loop.weight((2 * n - k - 1) % n);
    }
    return out;
}

LoopPath iterate_loop(const SurfaceModel& s, const LoopPath& loop, int m) {
    if (m < 1) throw std::invalid_argument("iterate count must be positive");
    LoopPath out;
    const int n = loop.size();
    out.period = m * loop.period;
    out.winding = m * loop.winding;
    out.samples.resize(static_cast<std::size_t>(n) * m);
    for (int k = 0; k < n * m; ++k) out.samples[static_cast<std::size_t>(k)] = loop.point(s, k);
    if (!loop.uniform()) {
        out.weights.resize(static_cast<std::size_t>(n) * m);
        for (int k = 0; k < n * m; ++k) out.weights[static_cast<std::size_t>(k)] = loop.weight(k % n) / m;
    }
    return out;
}

// ---------------------------------------------------------------------------
// I/O

void write_loops_csv(std::ostream& os, const SurfaceModel& s, const std::vector<LoopPath>& loops) {
    os << "t,x,y\n" << std::setprecision(17);
    for (std::size_t c = 0; c < loops.size(); ++c) {
        if (c > 0) os << "\n";
        const LoopPath& l = loops[c];
        for (int k = 0; k <= l.size(); ++k) {
            const double t = k == l.size() ? l.period : l.period * l.parameter(k);
            const Vec2 p = l.point(s, k);
            os << t << "," << p(0) << "," << p(1) << "\n";
        }
    }
}

std::vector<LoopPath> read_loops_csv(std::istream& is, const SurfaceModel& s) {
    std::vector<LoopPath> out;
    std::vector<std::array<double, 3>> rows;
    auto flush = [&]() {
        if (rows.empty()) return;
        if (rows.size() < 2) throw std::invalid_argument("curve block needs a closing row");
        LoopPath l;
        const auto& last = rows.back();
        l.period = last[0] - rows.front()[0];
        const Vec2 first(rows.front()[1], rows.front()[2]);
        const Vec2 close(last[1], last[2]);
        l.winding = round_to_lattice(s, close - first);
        const std::size_t n = rows.size() - 1;
        bool uniform = true;
        for (std::size_t k = 0; k < n; ++k) {
            l.samples.emplace_back(rows[k][1], rows[k][2]);
            const double w = (rows[k + 1][0] - rows[k][0]) / l.period;
            l.weights.push_back(w);
            if (std::abs(w - 1.0 / static_cast<double>(n)) > 1e-12) uniform = false;
        }
        if (uniform) l.weights.clear();
        if ((close - first - s.lattice_shift(l.winding)).norm() > 1e-9)
            throw std::invalid_argument("closing row does not match the first row modulo the lattice");
        out.push_back(std::move(l));
        rows.clear();
    };
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            flush();
            continue;
        }
        if (line.rfind("t,", 0) == 0) continue;
        std::array<double, 3> row{};
        std::stringstream ss(line);
        std::string cell;
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(ss, cell, ','))
                throw std::invalid_argument("line " + std::to_string(lineno) + ": expected t,x,y");
            try {
                row[static_cast<std::size_t>(i)] = std::stod(cell);
            } catch (const std::exception&) {
                throw std::invalid_argument("line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        rows.push_back(row);
    }
    flush();
    return out;
}

std::string render_svg(const SurfaceModel& s, const std::vector<LoopPath>& loops) {
    const double size = 500.0;
    const Vec2 o = s.domain_origin(), e = s.domain_extent();
    const Vec2 per = s.periods();
    auto map = [&](const Vec2& q) {
        return Vec2(size * (q(0) - o(0)) / e(0), size * (1.0 - (q(1) - o(1)) / e(1)));
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << size << "\" height=\"" << size
       << "\" fill=\"white\" stroke=\"black\"/>\n";
    for (std::size_t c = 0; c < loops.size(); ++c) {
        const LoopPath& l = loops[c];
        const char* col = colors[c % 6];
        // Runs leave the domain by one segment and restart from the opposite side.
        std::vector<std::vector<Vec2>> runs(1, {s.reduce(l.point(s, 0))});
        for (int k = 0; k < l.size(); ++k) {
            const Vec2 d = l.segment(s, k);
            const Vec2 next = runs.back().back() + d;
            runs.back().push_back(next);
            bool outside = false;
            for (int i = 0; i < 2; ++i)
                if (per(i) > 0.0 && (next(i) < o(i) || next(i) >= o(i) + e(i))) outside = true;
            if (outside && k + 1 < l.size()) {
                const Vec2 r = s.reduce(next);
                runs.push_back({r - d, r});
            }
        }
        for (const auto& run : runs) {
            if (run.size() < 2) continue;
            os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
            for (const Vec2& q : run) {
                const Vec2 p = map(q);
                os << p(0) << "," << p(1) << " ";
            }
            os << "\"/>\n";
        }
        const Vec2 p0 = map(s.reduce(l.point(s, 0)));
        Vec2 dir = l.segment(s, 0);
        dir = Vec2(dir(0) / e(0), -dir(1) / e(1));
        if (dir.norm() > 0.0) {
            dir.normalize();
            const Vec2 nrm(-dir(1), dir(0));
            const Vec2 tip = p0 + 10.0 * dir;
            const Vec2 b1 = p0 + 5.0 * nrm, b2 = p0 - 5.0 * nrm;
            os << "<polygon fill=\"" << col << "\" points=\"" << tip(0) << "," << tip(1) << " "
               << b1(0) << "," << b1(1) << " " << b2(0) << "," << b2(1) << "\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace magwaist
