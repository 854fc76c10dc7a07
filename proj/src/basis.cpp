#include "liquidtop/basis.hpp"

#include "liquidtop/errors.hpp"
#include "liquidtop/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cassert>
#include <fstream>
#include <utility>

namespace liquidtop {

namespace {

// Monomials of total degree <= deg in graded lexicographic order.
std::vector<std::array<unsigned, 3>> graded_monomials(int deg) {
    std::vector<std::array<unsigned, 3>> out;
    for (int d = 0; d <= deg; ++d) {
        for (int i = d; i >= 0; --i) {
            for (int j = d - i; j >= 0; --j) {
                out.push_back({static_cast<unsigned>(i), static_cast<unsigned>(j),
                               static_cast<unsigned>(d - i - j)});
            }
        }
    }
    return out;
}

Polynomial3 bump_polynomial(const Rational& h) {
    // phi = (h^2 - x^2)(h^2 - y^2)(h^2 - z^2); vanishes on every cube face.
    Polynomial3 phi = Polynomial3::constant(1);
    for (int ax = 0; ax < 3; ++ax) {
        Polynomial3 f = Polynomial3::constant(h * h) +
                        Polynomial3::monomial(ax == 0 ? 2 : 0, ax == 1 ? 2 : 0, ax == 2 ? 2 : 0,
                                              Rational(-1));
        phi = phi * f;
    }
    return phi;
}

VectorField curl_form_field(const Polynomial3& psi, int axis) {
    // grad(psi) x e_axis
    std::array<Polynomial3, 3> g = {psi.derivative(0), psi.derivative(1), psi.derivative(2)};
    VectorField b;
    switch (axis) {
        case 0:  // (0, psi_z, -psi_y)
            b.comp[1] = g[2];
            b.comp[2] = g[1].scaled(Rational(-1));
            break;
        case 1:  // (-psi_z, 0, psi_x)
            b.comp[0] = g[2].scaled(Rational(-1));
            b.comp[2] = g[0];
            break;
        default:  // (psi_y, -psi_x, 0)
            b.comp[0] = g[1];
            b.comp[1] = g[0].scaled(Rational(-1));
            break;
    }
    return b;
}

struct Selection {
    std::vector<VectorField> fields;
    ExactMatrix gram;  // of the selected fields
};

// Exact Gram-rank elimination with pivoting by largest remaining diagonal
// (ties broken by lowest index).  For a PSD matrix a vanishing Schur-
// complement diagonal marks a dependent candidate.
Selection build_selection(const Rational& h, int degree) {
    auto cands = cube_basis_candidates(h, degree);
    const int n = static_cast<int>(cands.size());

    ExactMatrix G(n, n);
    parallel_for(n, [&](std::size_t i) {
        for (int j = static_cast<int>(i); j < n; ++j) {
            Rational v = gram_entry(cands[i], cands[j], h);
            G(static_cast<int>(i), j) = v;
            G(j, static_cast<int>(i)) = v;
        }
    });

    ExactMatrix W = G;
    std::vector<bool> alive(n, true);
    std::vector<int> selected;
    for (;;) {
        int pivot = -1;
        for (int i = 0; i < n; ++i) {
            if (!alive[i] || W(i, i) == 0) continue;
            if (pivot < 0 || W(i, i) > W(pivot, pivot)) pivot = i;
        }
        if (pivot < 0) break;
        selected.push_back(pivot);
        alive[pivot] = false;
        for (int i = 0; i < n; ++i) {
            if (!alive[i] || W(i, pivot) == 0) continue;
            Rational f = W(i, pivot) / W(pivot, pivot);
            for (int j = 0; j < n; ++j) {
                if (!alive[j] && j != pivot) continue;
                W(i, j) -= f * W(pivot, j);
            }
        }
    }
    if (selected.empty()) throw EmptyBasis("no independent field generated");
    std::sort(selected.begin(), selected.end());

    Selection sel;
    sel.fields.reserve(selected.size());
    for (int idx : selected) sel.fields.push_back(std::move(cands[idx]));
    const int N = static_cast<int>(selected.size());
    sel.gram = ExactMatrix(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) sel.gram(i, j) = G(selected[i], selected[j]);
    }
    return sel;
}

// Pre-integrated moments of one field component against the monomial box:
//   F(t) = int (b_j)_a * x^t  over [-h,h]^3,
// tabulated for the single parity class the component lives in (curl-form
// components are parity-pure, so every other class pairs to zero).
struct ComponentMoments {
    MonoKey parity = 0;
    int nx = 0, ny = 0, nz = 0;
    std::vector<Rational> f;
    bool empty = true;

    const Rational* lookup(MonoKey t) const {
        if (empty || mono_parity(t) != parity) return nullptr;
        int ix = (static_cast<int>(mono_exp(t, 0)) - static_cast<int>(parity & 1u)) / 2;
        int iy = (static_cast<int>(mono_exp(t, 1)) - static_cast<int>((parity >> 8) & 1u)) / 2;
        int iz = (static_cast<int>(mono_exp(t, 2)) - static_cast<int>((parity >> 16) & 1u)) / 2;
        if (ix >= nx || iy >= ny || iz >= nz) return nullptr;
        return &f[(static_cast<std::size_t>(ix) * ny + iy) * nz + iz];
    }
};

ComponentMoments component_moments(const Polynomial3& p, int tmax, const Rational& h) {
    ComponentMoments m;
    if (p.is_zero()) return m;
    m.empty = false;
    m.parity = mono_parity(p.terms().front().key);
    const unsigned px = m.parity & 1u, py = (m.parity >> 8) & 1u, pz = (m.parity >> 16) & 1u;
    m.nx = (tmax - static_cast<int>(px)) / 2 + 1;
    m.ny = (tmax - static_cast<int>(py)) / 2 + 1;
    m.nz = (tmax - static_cast<int>(pz)) / 2 + 1;
    int smax = 0;
    for (const auto& t : p.terms()) {
        smax = std::max({smax, static_cast<int>(mono_exp(t.key, 0)),
                         static_cast<int>(mono_exp(t.key, 1)), static_cast<int>(mono_exp(t.key, 2))});
    }
    auto I = monomial_integrals(static_cast<unsigned>(smax + tmax), h);
    m.f.assign(static_cast<std::size_t>(m.nx) * m.ny * m.nz, Rational(0));
    for (int ix = 0; ix < m.nx; ++ix) {
        for (int iy = 0; iy < m.ny; ++iy) {
            for (int iz = 0; iz < m.nz; ++iz) {
                unsigned tx = 2 * ix + px, ty = 2 * iy + py, tz = 2 * iz + pz;
                Rational s(0);
                for (const auto& term : p.terms()) {
                    s += term.coeff * I[mono_exp(term.key, 0) + tx] * I[mono_exp(term.key, 1) + ty] *
                         I[mono_exp(term.key, 2) + tz];
                }
                m.f[(static_cast<std::size_t>(ix) * m.ny + iy) * m.nz + iz] = std::move(s);
            }
        }
    }
    return m;
}

}  // namespace

std::vector<VectorField> cube_basis_candidates(const Rational& h, int degree) {
    Polynomial3 phi = bump_polynomial(h);
    Polynomial3 phi2 = phi * phi;
    std::vector<VectorField> cands;
    for (const auto& m : graded_monomials(degree)) {
        Polynomial3 psi = phi2 * Polynomial3::monomial(m[0], m[1], m[2], Rational(1));
        for (int axis = 0; axis < 3; ++axis) {
            VectorField b = curl_form_field(psi, axis);
            if (!b.is_zero()) cands.push_back(std::move(b));
        }
    }
    return cands;
}

Rational gram_entry(const VectorField& a, const VectorField& b, const Rational& h) {
    Rational s(0);
    for (int c = 0; c < 3; ++c) s += integral_of_product(a.comp[c], b.comp[c], h);
    return s;
}

Rational stiffness_entry(const VectorField& a, const VectorField& b, const Rational& h) {
    Rational s(0);
    for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
            s += integral_of_product(a.comp[c].derivative(d), b.comp[c].derivative(d), h);
        }
    }
    return s;
}

Rational moment_entry(int axis, const VectorField& b, const Rational& h) {
    // (x cross b) . e_axis
    static const int nxt[3] = {1, 2, 0};
    int p = nxt[axis], q = nxt[p];
    Polynomial3 xp = Polynomial3::monomial(p == 0, p == 1, p == 2, Rational(1));
    Polynomial3 xq = Polynomial3::monomial(q == 0, q == 1, q == 2, Rational(1));
    return integrate_cube(xp * b.comp[q] - xq * b.comp[p], h);
}

Rational coriolis_entry(int axis, const VectorField& a, const VectorField& b, const Rational& h) {
    // a . (e_axis cross b)
    static const int nxt[3] = {1, 2, 0};
    int p = nxt[axis], q = nxt[p];
    return integral_of_product(a.comp[p], b.comp[q], h) -
           integral_of_product(a.comp[q], b.comp[p], h);
}

Rational convective_entry(const VectorField& a, const VectorField& b, const VectorField& c,
                          const Rational& h) {
    Rational s(0);
    for (int i = 0; i < 3; ++i) {
        Polynomial3 w;
        for (int d = 0; d < 3; ++d) w = w + b.comp[d] * c.comp[i].derivative(d);
        s += integral_of_product(a.comp[i], w, h);
    }
    return s;
}

SolenoidalBasis build_cube_basis(const Rational& h, int degree) {
    if (degree < 0) throw EmptyBasis("degree must be nonnegative");
    if (h <= 0) throw EmptyBasis("cavity half-width must be positive");

    Selection sel = build_selection(h, degree);
    SolenoidalBasis basis;
    basis.h = h;
    basis.degree = degree;
    basis.fields = std::move(sel.fields);
    basis.gram = std::move(sel.gram);
    const int N = basis.size();

    basis.stiffness = ExactMatrix(N, N);
    parallel_for(N, [&](std::size_t j) {
        for (int k = static_cast<int>(j); k < N; ++k) {
            Rational v = stiffness_entry(basis.fields[j], basis.fields[k], h);
            basis.stiffness(static_cast<int>(j), k) = v;
            basis.stiffness(k, static_cast<int>(j)) = v;
        }
    });

    basis.moment = ExactMatrix(3, N);
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < N; ++k) basis.moment(i, k) = moment_entry(i, basis.fields[k], h);
    }

    for (int i = 0; i < 3; ++i) basis.coriolis[i] = ExactMatrix(N, N);
    parallel_for(N, [&](std::size_t j) {
        for (int k = static_cast<int>(j); k < N; ++k) {
            for (int i = 0; i < 3; ++i) {
                // antisymmetric: b.(e x b) vanishes pointwise on the diagonal
                Rational v = (k == static_cast<int>(j))
                                 ? Rational(0)
                                 : coriolis_entry(i, basis.fields[j], basis.fields[k], h);
                basis.coriolis[i](static_cast<int>(j), k) = v;
                basis.coriolis[i](k, static_cast<int>(j)) = -v;
            }
        }
    });

    // Convective tensor through pre-integrated component moments; the skew
    // identity T[j,k,l] = -T[l,k,j] halves the work and zeroes j == l.
    int field_axis_degree = 0;
    for (const auto& f : basis.fields) {
        for (int a = 0; a < 3; ++a) {
            for (int ax = 0; ax < 3; ++ax)
                field_axis_degree = std::max(field_axis_degree, f.comp[a].degree_in(ax));
        }
    }
    const int tmax = 2 * field_axis_degree;
    std::vector<std::array<ComponentMoments, 3>> F(N);
    parallel_for(N, [&](std::size_t j) {
        for (int a = 0; a < 3; ++a) F[j][a] = component_moments(basis.fields[j].comp[a], tmax, h);
    });

    std::vector<std::array<std::array<Polynomial3, 3>, 3>> deriv(N);  // deriv[l][a][c]
    for (int l = 0; l < N; ++l) {
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) deriv[l][a][c] = basis.fields[l].comp[a].derivative(c);
        }
    }

    basis.convective = ExactTensor(N);
    parallel_for(static_cast<std::size_t>(N) * N, [&](std::size_t kl) {
        const int k = static_cast<int>(kl / N);
        const int l = static_cast<int>(kl % N);
        if (l == 0) return;  // inner loop is j < l
        std::array<Polynomial3, 3> w;  // w_a = sum_c (b_k)_c d_c (b_l)_a
        for (int a = 0; a < 3; ++a) {
            for (int c = 0; c < 3; ++c) w[a] = w[a] + basis.fields[k].comp[c] * deriv[l][a][c];
        }
        for (int j = 0; j < l; ++j) {
            Rational v(0);
            for (int a = 0; a < 3; ++a) {
                if (F[j][a].empty) continue;
                for (const auto& term : w[a].terms()) {
                    if (const Rational* m = F[j][a].lookup(term.key)) v += term.coeff * *m;
                }
            }
            basis.convective(j, k, l) = v;
            basis.convective(l, k, j) = -v;
        }
    });

    return basis;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

nlohmann::json matrix_to_json(const ExactMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols; ++j) row.push_back(rational_to_string(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

ExactMatrix matrix_from_json(const nlohmann::json& j) {
    ExactMatrix m(static_cast<int>(j.size()), j.empty() ? 0 : static_cast<int>(j[0].size()));
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            m(r, c) = rational_from_string(j[r][c].get<std::string>());
        }
    }
    return m;
}

}  // namespace

void save_basis(const SolenoidalBasis& basis, const std::string& path) {
    nlohmann::json j;
    j["h"] = rational_to_string(basis.h);
    j["degree"] = basis.degree;
    j["N"] = basis.size();
    j["gram"] = matrix_to_json(basis.gram);
    j["stiffness"] = matrix_to_json(basis.stiffness);
    j["moment"] = matrix_to_json(basis.moment);
    nlohmann::json cor = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) cor.push_back(matrix_to_json(basis.coriolis[i]));
    j["coriolis"] = std::move(cor);
    const int N = basis.size();
    nlohmann::json conv = nlohmann::json::array();
    for (int a = 0; a < N; ++a) {
        nlohmann::json plane = nlohmann::json::array();
        for (int b = 0; b < N; ++b) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < N; ++c) row.push_back(rational_to_string(basis.convective(a, b, c)));
            plane.push_back(std::move(row));
        }
        conv.push_back(std::move(plane));
    }
    j["convective"] = std::move(conv);

    std::ofstream out(path);
    if (!out) throw Error("cannot write basis file: " + path);
    out << j.dump() << "\n";
}

SolenoidalBasis load_basis(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read basis file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);

    const Rational h = rational_from_string(j.at("h").get<std::string>());
    const int degree = j.at("degree").get<int>();
    Selection sel = build_selection(h, degree);
    const int N = static_cast<int>(sel.fields.size());
    if (j.at("N").get<int>() != N) {
        throw Error("basis file inconsistent with deterministic reconstruction: " + path);
    }

    SolenoidalBasis basis;
    basis.h = h;
    basis.degree = degree;
    basis.fields = std::move(sel.fields);
    basis.gram = matrix_from_json(j.at("gram"));
    for (int r = 0; r < N; ++r) {
        for (int c = 0; c < N; ++c) {
            if (basis.gram(r, c) != sel.gram(r, c)) {
                throw Error("basis file gram table mismatch: " + path);
            }
        }
    }
    basis.stiffness = matrix_from_json(j.at("stiffness"));
    basis.moment = matrix_from_json(j.at("moment"));
    for (int i = 0; i < 3; ++i) basis.coriolis[i] = matrix_from_json(j.at("coriolis")[i]);
    basis.convective = ExactTensor(N);
    const auto& conv = j.at("convective");
    for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
            for (int c = 0; c < N; ++c) {
                basis.convective(a, b, c) = rational_from_string(conv[a][b][c].get<std::string>());
            }
        }
    }
    return basis;
}

}  // namespace liquidtop
