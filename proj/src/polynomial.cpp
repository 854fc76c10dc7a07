#include "liquidtop/polynomial.hpp"

#include <algorithm>
#include <array>
#include <cassert>

namespace liquidtop {

Polynomial3 Polynomial3::constant(const Rational& c) { return monomial(0, 0, 0, c); }

Polynomial3 Polynomial3::monomial(unsigned ex, unsigned ey, unsigned ez, const Rational& c) {
    Polynomial3 p;
    if (c != 0) p.terms_.push_back({mono_key(ex, ey, ez), c});
    return p;
}

Polynomial3 Polynomial3::from_terms(std::vector<Term> raw) {
    std::sort(raw.begin(), raw.end(), [](const Term& a, const Term& b) { return a.key < b.key; });
    Polynomial3 p;
    p.terms_.reserve(raw.size());
    for (auto& t : raw) {
        if (!p.terms_.empty() && p.terms_.back().key == t.key) {
            p.terms_.back().coeff += t.coeff;
        } else {
            p.terms_.push_back(std::move(t));
        }
    }
    p.terms_.erase(std::remove_if(p.terms_.begin(), p.terms_.end(),
                                  [](const Term& t) { return t.coeff == 0; }),
                   p.terms_.end());
    return p;
}

int Polynomial3::total_degree() const {
    int d = -1;
    for (const auto& t : terms_) {
        int s = static_cast<int>(mono_exp(t.key, 0) + mono_exp(t.key, 1) + mono_exp(t.key, 2));
        d = std::max(d, s);
    }
    return d;
}

int Polynomial3::degree_in(int axis) const {
    int d = -1;
    for (const auto& t : terms_) d = std::max(d, static_cast<int>(mono_exp(t.key, axis)));
    return d;
}

Polynomial3 Polynomial3::operator+(const Polynomial3& o) const {
    Polynomial3 r;
    r.terms_.reserve(terms_.size() + o.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < terms_.size() && j < o.terms_.size()) {
        if (terms_[i].key < o.terms_[j].key) {
            r.terms_.push_back(terms_[i++]);
        } else if (terms_[i].key > o.terms_[j].key) {
            r.terms_.push_back(o.terms_[j++]);
        } else {
            Rational c = terms_[i].coeff + o.terms_[j].coeff;
            if (c != 0) r.terms_.push_back({terms_[i].key, std::move(c)});
            ++i, ++j;
        }
    }
    for (; i < terms_.size(); ++i) r.terms_.push_back(terms_[i]);
    for (; j < o.terms_.size(); ++j) r.terms_.push_back(o.terms_[j]);
    return r;
}

Polynomial3 Polynomial3::operator-(const Polynomial3& o) const { return *this + o.scaled(Rational(-1)); }

Polynomial3 Polynomial3::operator*(const Polynomial3& o) const {
    std::vector<Term> raw;
    raw.reserve(terms_.size() * o.terms_.size());
    for (const auto& a : terms_) {
        for (const auto& b : o.terms_) {
            raw.push_back({a.key + b.key, a.coeff * b.coeff});
        }
    }
    return from_terms(std::move(raw));
}

Polynomial3 Polynomial3::scaled(const Rational& s) const {
    Polynomial3 r;
    if (s == 0) return r;
    r.terms_.reserve(terms_.size());
    for (const auto& t : terms_) r.terms_.push_back({t.key, t.coeff * s});
    return r;
}

Polynomial3 Polynomial3::derivative(int axis) const {
    Polynomial3 r;
    r.terms_.reserve(terms_.size());
    const MonoKey one = mono_key(axis == 0, axis == 1, axis == 2);
    for (const auto& t : terms_) {
        unsigned e = mono_exp(t.key, axis);
        if (e == 0) continue;
        r.terms_.push_back({t.key - one, t.coeff * static_cast<long>(e)});
    }
    return r;
}

Rational Polynomial3::eval(const Rational& x, const Rational& y, const Rational& z) const {
    unsigned mx = 0, my = 0, mz = 0;
    for (const auto& t : terms_) {
        mx = std::max(mx, mono_exp(t.key, 0));
        my = std::max(my, mono_exp(t.key, 1));
        mz = std::max(mz, mono_exp(t.key, 2));
    }
    auto powers = [](const Rational& v, unsigned m) {
        std::vector<Rational> p(m + 1);
        p[0] = 1;
        for (unsigned i = 1; i <= m; ++i) p[i] = p[i - 1] * v;
        return p;
    };
    auto px = powers(x, mx), py = powers(y, my), pz = powers(z, mz);
    Rational s(0);
    for (const auto& t : terms_) {
        s += t.coeff * px[mono_exp(t.key, 0)] * py[mono_exp(t.key, 1)] * pz[mono_exp(t.key, 2)];
    }
    return s;
}

double Polynomial3::eval(double x, double y, double z) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double v = to_double(t.coeff);
        for (unsigned i = 0; i < mono_exp(t.key, 0); ++i) v *= x;
        for (unsigned i = 0; i < mono_exp(t.key, 1); ++i) v *= y;
        for (unsigned i = 0; i < mono_exp(t.key, 2); ++i) v *= z;
        s += v;
    }
    return s;
}

Polynomial3 VectorField::divergence() const {
    return comp[0].derivative(0) + comp[1].derivative(1) + comp[2].derivative(2);
}

std::vector<Rational> monomial_integrals(unsigned max_exponent, const Rational& h) {
    std::vector<Rational> table(max_exponent + 1, Rational(0));
    // int_{-h}^{h} t^n dt = 0 (n odd), 2 h^{n+1}/(n+1) (n even)
    Rational hp = h;  // h^{n+1}
    for (unsigned n = 0; n <= max_exponent; ++n) {
        if (n % 2 == 0) table[n] = 2 * hp / static_cast<long>(n + 1);
        hp *= h;
    }
    return table;
}

Rational integrate_cube(const Polynomial3& p, const Rational& h) {
    unsigned maxe = 0;
    for (const auto& t : p.terms()) {
        maxe = std::max({maxe, mono_exp(t.key, 0), mono_exp(t.key, 1), mono_exp(t.key, 2)});
    }
    auto I = monomial_integrals(maxe, h);
    Rational s(0);
    for (const auto& t : p.terms()) {
        if (mono_parity(t.key) != 0) continue;  // odd in some variable
        s += t.coeff * I[mono_exp(t.key, 0)] * I[mono_exp(t.key, 1)] * I[mono_exp(t.key, 2)];
    }
    return s;
}

Rational integral_of_product(const Polynomial3& p, const Polynomial3& q, const Rational& h) {
    if (p.is_zero() || q.is_zero()) return Rational(0);
    unsigned maxe = 0;
    for (const auto& t : p.terms())
        maxe = std::max({maxe, mono_exp(t.key, 0), mono_exp(t.key, 1), mono_exp(t.key, 2)});
    unsigned maxq = 0;
    for (const auto& t : q.terms())
        maxq = std::max({maxq, mono_exp(t.key, 0), mono_exp(t.key, 1), mono_exp(t.key, 2)});
    auto I = monomial_integrals(maxe + maxq, h);

    // Bucket q by parity class; a pair contributes iff parities match.
    std::array<std::vector<const Polynomial3::Term*>, 8> buckets;
    auto slot = [](MonoKey par) {
        return (par & 1u) | ((par >> 7) & 2u) | ((par >> 14) & 4u);
    };
    for (const auto& t : q.terms()) buckets[slot(mono_parity(t.key))].push_back(&t);

    Rational s(0);
    for (const auto& a : p.terms()) {
        for (const auto* b : buckets[slot(mono_parity(a.key))]) {
            MonoKey k = a.key + b->key;
            s += a.coeff * b->coeff * I[mono_exp(k, 0)] * I[mono_exp(k, 1)] * I[mono_exp(k, 2)];
        }
    }
    return s;
}

}  // namespace liquidtop
