#include "magwaist/homology.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "magwaist/errors.hpp"

namespace magwaist {

namespace {

// Oriented crossings of the curves with the dual graph of the face grid.
// Horizontal dual edge (i, j) joins face (i, j) to face (i+1, j); vertical
// dual edge (i, j) joins face (i, j) to face (i, j+1). `delta` holds
// n(second face) − n(first face) demanded by the curves.
struct DualCrossings {
    int k = 0;
    bool wrap_y = true;
    std::vector<int> dh, dv, ch, cv;
    struct Witness {
        bool horizontal;
        int edge;
        int sign;
    };
    std::vector<std::optional<Witness>> witness;
};

// Segments this close on one component that cross a dual edge out and back
// enclose a sliver with no face center; the pair cancels.
constexpr int kFoldSpan = 2;

DualCrossings rasterize(const SurfaceModel& s, const Multicurve& mc, int k) {
    DualCrossings dc;
    dc.k = k;
    dc.wrap_y = s.periods()(1) > 0.0;
    const std::size_t edges = static_cast<std::size_t>(k) * k;
    dc.dh.assign(edges, 0);
    dc.dv.assign(edges, 0);
    dc.ch.assign(edges, 0);
    dc.cv.assign(edges, 0);
    dc.witness.resize(mc.components.size());
    const Vec2 o = s.domain_origin();
    const Vec2 h = s.domain_extent() / k;
    auto wrap = [k](long i) { return static_cast<int>(((i % k) + k) % k); };
    struct Owner {
        int component = -1;
        int segment = -1;
        int sign = 0;
    };
    std::vector<Owner> owner_h(edges), owner_v(edges);
    std::vector<std::vector<DualCrossings::Witness>> crossings(mc.components.size());

    for (std::size_t c = 0; c < mc.components.size(); ++c) {
        const LoopPath& loop = mc.components[c];
        const int n = loop.size();
        for (int seg = 0; seg < n; ++seg) {
            const Vec2 p = loop.point(s, seg);
            const Vec2 q = loop.point(s, seg + 1);
            // Lines y = o_y + h_y/2 + m h_y (horizontal dual edges) crossed by
            // the segment, half-open so that shared vertices count once.
            for (int axis = 0; axis < 2; ++axis) {
                const int other = 1 - axis;
                const double lo = std::min(p(axis), q(axis));
                const double hi = std::max(p(axis), q(axis));
                if (lo == hi) continue;
                const double c0 = o(axis) + 0.5 * h(axis);
                const long m0 = static_cast<long>(std::ceil((lo - c0) / h(axis)));
                const long m1 = static_cast<long>(std::ceil((hi - c0) / h(axis))) - 1;
                for (long m = m0; m <= m1; ++m) {
                    const double line = c0 + m * h(axis);
                    if (!(line >= lo && line < hi)) continue;
                    const double f = (line - p(axis)) / (q(axis) - p(axis));
                    const double x = p(other) + f * (q(other) - p(other));
                    const long idx = static_cast<long>(std::floor((x - o(other) - 0.5 * h(other)) / h(other)));
                    const bool up = q(axis) > p(axis);
                    int fi, fj, sign;
                    bool horizontal;
                    if (axis == 1) {
                        // Horizontal dual line: edge between faces (idx, m) and (idx+1, m).
                        if (!dc.wrap_y && (m < 0 || m >= k - 1)) throw RasterizationError("curve passes through a pole cap row");
                        horizontal = true;
                        fi = wrap(idx);
                        fj = wrap(m);
                        sign = up ? -1 : 1;
                    } else {
                        // Vertical dual line: edge between faces (m, idx) and (m, idx+1).
                        horizontal = false;
                        fi = wrap(m);
                        if (!dc.wrap_y && (idx < 0 || idx >= k - 1))
                            throw RasterizationError("curve passes through a pole cap row");
                        fj = wrap(idx);
                        sign = up ? 1 : -1;
                    }
                    const std::size_t e = static_cast<std::size_t>(fj) * k + fi;
                    auto& d = horizontal ? dc.dh : dc.dv;
                    auto& cnt = horizontal ? dc.ch : dc.cv;
                    Owner& own = (horizontal ? owner_h : owner_v)[e];
                    if (cnt[e] == 1) {
                        const int gap = std::abs(seg - own.segment);
                        const bool fold = own.component == static_cast<int>(c) && own.sign == -sign &&
                                          std::min(gap, n - gap) <= kFoldSpan;
                        if (!fold) {
                            std::ostringstream os;
                            os << "two strands cross the dual edge at face (" << fi << ", " << fj
                               << "); the multicurve is too fine for a " << k << "x" << k << " grid";
                            throw RasterizationError(os.str());
                        }
                        d[e] = 0;
                        cnt[e] = 0;
                        own = Owner{};
                        continue;
                    }
                    if (cnt[e] > 1) throw RasterizationError("dual edge crossed more than twice");
                    d[e] += sign;
                    cnt[e] = 1;
                    own = Owner{static_cast<int>(c), seg, sign};
                    crossings[c].push_back(DualCrossings::Witness{horizontal, static_cast<int>(e), sign});
                }
            }
        }
    }
    for (std::size_t c = 0; c < mc.components.size(); ++c) {
        for (const auto& w : crossings[c]) {
            const Owner& own = (w.horizontal ? owner_h : owner_v)[static_cast<std::size_t>(w.edge)];
            if (own.component == static_cast<int>(c) && own.sign == w.sign) {
                dc.witness[c] = w;
                break;
            }
        }
        if (!dc.witness[c]) {
            std::ostringstream os;
            os << "component " << c << " does not cross any dual edge of the grid";
            throw RasterizationError(os.str());
        }
    }
    return dc;
}

struct Neighbor {
    int face;
    int delta;      // n(neighbor) − n(face)
    bool crossed;   // some strand separates the two faces
};

template <typename F>
void for_each_neighbor(const DualCrossings& dc, int face, F&& f) {
    const int k = dc.k;
    const int i = face % k, j = face / k;
    const int ip = (i + 1) % k, im = (i + k - 1) % k;
    const std::size_t e_r = static_cast<std::size_t>(j) * k + i;
    const std::size_t e_l = static_cast<std::size_t>(j) * k + im;
    f(Neighbor{j * k + ip, dc.dh[e_r], dc.ch[e_r] != 0});
    f(Neighbor{j * k + im, -dc.dh[e_l], dc.ch[e_l] != 0});
    if (dc.wrap_y || j + 1 < k) {
        const int jp = (j + 1) % k;
        const std::size_t e_u = static_cast<std::size_t>(j) * k + i;
        f(Neighbor{jp * k + i, dc.dv[e_u], dc.cv[e_u] != 0});
    }
    if (dc.wrap_y || j > 0) {
        const int jm = (j + k - 1) % k;
        const std::size_t e_d = static_cast<std::size_t>(jm) * k + i;
        f(Neighbor{jm * k + i, -dc.dv[e_d], dc.cv[e_d] != 0});
    }
}

std::pair<int, int> witness_faces(const DualCrossings& dc, const DualCrossings::Witness& w) {
    const int k = dc.k;
    const int i = w.edge % k, j = w.edge / k;
    const int first = j * k + i;
    const int second = w.horizontal ? j * k + (i + 1) % k : ((j + 1) % k) * k + i;
    return {first, second};
}

std::vector<int> face_coefficients(const BoundaryCertificate& cert) {
    std::vector<int> n(cert.region_labels.size());
    for (std::size_t f = 0; f < n.size(); ++f)
        n[f] = cert.chain_coeffs[static_cast<std::size_t>(cert.region_labels[f] - 1)];
    return n;
}

Multicurve subset(const SurfaceModel& s, const Multicurve& mc, const std::vector<int>& idx) {
    std::vector<LoopPath> comps;
    for (int i : idx) comps.push_back(mc.components[static_cast<std::size_t>(i)]);
    Multicurve out = make_multicurve(s, std::move(comps));
    out.embedded = mc.embedded;
    return out;
}

int gcd_abs(int a, int b) { return std::gcd(std::abs(a), std::abs(b)); }

}  // namespace

bool BoundaryCertificate::topological() const {
    return std::all_of(chain_coeffs.begin(), chain_coeffs.end(), [](int n) { return n == 0 || n == 1; });
}

int BoundaryCertificate::coefficient_at_face(int i, int j) const {
    return chain_coeffs[static_cast<std::size_t>(region_labels[static_cast<std::size_t>(j) * grid + i] - 1)];
}

std::optional<BoundaryCertificate> solve_bounding_chain(const SurfaceModel& s, const Multicurve& mc,
                                                        int grid) {
    if (grid < 4) throw std::invalid_argument("homology grid must be at least 4x4");
    const DualCrossings dc = rasterize(s, mc, grid);
    const int faces = grid * grid;

    // Integrate n along the dual graph; any inconsistency is a non-zero class.
    std::vector<int> n(static_cast<std::size_t>(faces), INT_MIN);
    std::deque<int> queue{0};
    n[0] = 0;
    bool consistent = true;
    while (!queue.empty() && consistent) {
        const int f = queue.front();
        queue.pop_front();
        for_each_neighbor(dc, f, [&](const Neighbor& nb) {
            const int want = n[static_cast<std::size_t>(f)] + nb.delta;
            int& have = n[static_cast<std::size_t>(nb.face)];
            if (have == INT_MIN) {
                have = want;
                queue.push_back(nb.face);
            } else if (have != want) {
                consistent = false;
            }
        });
    }
    if (!consistent) return std::nullopt;

    BoundaryCertificate cert;
    cert.surface = s;
    cert.curves = mc;
    cert.grid = grid;
    cert.region_labels.assign(static_cast<std::size_t>(faces), 0);
    int regions = 0;
    for (int start = 0; start < faces; ++start) {
        if (cert.region_labels[static_cast<std::size_t>(start)] != 0) continue;
        ++regions;
        cert.chain_coeffs.push_back(n[static_cast<std::size_t>(start)]);
        std::deque<int> q{start};
        cert.region_labels[static_cast<std::size_t>(start)] = regions;
        while (!q.empty()) {
            const int f = q.front();
            q.pop_front();
            for_each_neighbor(dc, f, [&](const Neighbor& nb) {
                if (nb.crossed) return;
                int& lab = cert.region_labels[static_cast<std::size_t>(nb.face)];
                if (lab == 0) {
                    lab = regions;
                    q.push_back(nb.face);
                }
            });
        }
    }
    const int lowest = *std::min_element(cert.chain_coeffs.begin(), cert.chain_coeffs.end());
    for (int& c : cert.chain_coeffs) c -= lowest;

    for (std::size_t c = 0; c < mc.components.size(); ++c) {
        const auto& w = *dc.witness[c];
        const auto [first, second] = witness_faces(dc, w);
        const int r1 = cert.region_labels[static_cast<std::size_t>(first)];
        const int r2 = cert.region_labels[static_cast<std::size_t>(second)];
        cert.iota_plus.push_back(w.sign > 0 ? r2 : r1);
        cert.iota_minus.push_back(w.sign > 0 ? r1 : r2);
    }
    return cert;
}

bool verify_boundary(const BoundaryCertificate& cert) {
    const DualCrossings dc = rasterize(cert.surface, cert.curves, cert.grid);
    const std::vector<int> n = face_coefficients(cert);
    const int faces = cert.grid * cert.grid;
    bool ok = true;
    for (int f = 0; f < faces && ok; ++f)
        for_each_neighbor(dc, f, [&](const Neighbor& nb) {
            if (n[static_cast<std::size_t>(nb.face)] - n[static_cast<std::size_t>(f)] != nb.delta) ok = false;
        });
    for (std::size_t c = 0; c < cert.iota_plus.size() && ok; ++c) {
        const int np = cert.chain_coeffs[static_cast<std::size_t>(cert.iota_plus[c] - 1)];
        const int nm = cert.chain_coeffs[static_cast<std::size_t>(cert.iota_minus[c] - 1)];
        if (np != nm + 1) ok = false;
    }
    return ok;
}

std::vector<Multicurve> decompose_topological_boundaries(BoundaryCertificate& cert) {
    const SurfaceModel& s = cert.surface;
    std::vector<int> remaining(cert.curves.components.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<Multicurve> pieces;
    cert.decomposition.clear();
    cert.piece_irreducible.clear();
    while (!remaining.empty()) {
        const Multicurve sub = subset(s, cert.curves, remaining);
        const auto local = solve_bounding_chain(s, sub, cert.grid);
        if (!local) throw NotABoundaryError("remaining curves are not null-homologous");
        const int m = static_cast<int>(remaining.size());
        std::vector<char> in_sigma(static_cast<std::size_t>(local->region_count()) + 1, 0);
        std::vector<int> frontier{local->iota_plus[0]};
        in_sigma[static_cast<std::size_t>(frontier[0])] = 1;
        while (!frontier.empty()) {
            std::vector<int> next;
            for (int c = 0; c < m; ++c) {
                const int minus = local->iota_minus[static_cast<std::size_t>(c)];
                const int plus = local->iota_plus[static_cast<std::size_t>(c)];
                if (std::find(frontier.begin(), frontier.end(), minus) == frontier.end()) continue;
                if (!in_sigma[static_cast<std::size_t>(plus)]) {
                    in_sigma[static_cast<std::size_t>(plus)] = 1;
                    next.push_back(plus);
                }
            }
            frontier = std::move(next);
        }
        std::vector<int> piece, rest;
        for (int c = 0; c < m; ++c) {
            const bool plus_in = in_sigma[static_cast<std::size_t>(local->iota_plus[static_cast<std::size_t>(c)])];
            const bool minus_in = in_sigma[static_cast<std::size_t>(local->iota_minus[static_cast<std::size_t>(c)])];
            (plus_in && !minus_in ? piece : rest).push_back(remaining[static_cast<std::size_t>(c)]);
        }
        if (piece.empty()) throw NotABoundaryError("decomposition produced an empty piece");
        Multicurve pm = subset(s, cert.curves, piece);
        cert.piece_irreducible.push_back(check_irreducible(s, pm, cert.grid).irreducible);
        cert.decomposition.push_back(piece);
        pieces.push_back(std::move(pm));
        remaining = std::move(rest);
    }
    return pieces;
}

IrreducibilityReport check_irreducible(const SurfaceModel& s, const Multicurve& mc, int grid) {
    const auto cert = solve_bounding_chain(s, mc, grid);
    if (!cert) throw NotABoundaryError("multicurve is not null-homologous");
    if (!cert->topological()) throw NotABoundaryError("multicurve bounds a 2-chain with multiplicities other than 0 and 1");
    IrreducibilityReport rep;
    const int m = static_cast<int>(mc.components.size());
    for (const auto& c : mc.components) rep.component_classes.push_back(homology_class(s, c));
    rep.bound_ok = m <= s.genus() + 1;
    if (s.homology_rank() == 0) {
        rep.irreducible = m == 1;
    } else {
        if (m > 20) throw std::invalid_argument("irreducibility check limited to 20 components");
        rep.irreducible = true;
        for (long mask = 1; mask < (1L << m) - 1 && rep.irreducible; ++mask) {
            Eigen::VectorXi sum = Eigen::VectorXi::Zero(s.homology_rank());
            for (int i = 0; i < m; ++i)
                if (mask & (1L << i)) sum += rep.component_classes[static_cast<std::size_t>(i)];
            if (sum.isZero()) rep.irreducible = false;
        }
    }
    if (m > 1 && s.homology_rank() > 0) {
        for (int i = 0; i < m; ++i) {
            const auto& a = rep.component_classes[static_cast<std::size_t>(i)];
            if (gcd_abs(a(0), a(1)) != 1) rep.classes_primitive_distinct = false;
            for (int j = i + 1; j < m; ++j)
                if (a == rep.component_classes[static_cast<std::size_t>(j)]) rep.classes_primitive_distinct = false;
        }
    }
    return rep;
}

nlohmann::json certificate_to_json(const BoundaryCertificate& cert) {
    nlohmann::json rle = nlohmann::json::array();
    for (std::size_t f = 0; f < cert.region_labels.size();) {
        std::size_t g = f;
        while (g < cert.region_labels.size() && cert.region_labels[g] == cert.region_labels[f]) ++g;
        rle.push_back({cert.region_labels[f], g - f});
        f = g;
    }
    nlohmann::json j;
    j["grid"] = cert.grid;
    j["region_labels_rle"] = rle;
    j["chain_coeffs"] = cert.chain_coeffs;
    j["iota_plus"] = cert.iota_plus;
    j["iota_minus"] = cert.iota_minus;
    j["topological"] = cert.topological();
    j["decomposition"] = cert.decomposition;
    std::vector<bool> irr(cert.piece_irreducible.begin(), cert.piece_irreducible.end());
    j["piece_irreducible"] = irr;
    return j;
}

}  // namespace magwaist
