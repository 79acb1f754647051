#pragma once

#include <cstdint>
#include <string>

#include <gmpxx.h>

#include "btrengine/errors.hpp"

namespace btrengine {

// Exact rational scalar for the Wick oracle. GMP's canonical mpq carries the
// invariants we need (reduced, positive denominator); this wrapper pins the
// interface the rest of the library relies on.
class BigRational {
public:
    BigRational() : q_(0) {}
    BigRational(long n) : q_(n) {}
    BigRational(long num, unsigned long den) : q_(num, den) { q_.canonicalize(); }
    explicit BigRational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

    static BigRational from_string(const std::string& s) {
        mpq_class q;
        if (q.set_str(s, 10) != 0) throw Error("parse error", "bad rational literal: " + s);
        q.canonicalize();
        return BigRational(q);
    }

    BigRational& operator+=(const BigRational& o) { q_ += o.q_; return *this; }
    BigRational& operator-=(const BigRational& o) { q_ -= o.q_; return *this; }
    BigRational& operator*=(const BigRational& o) { q_ *= o.q_; return *this; }
    BigRational& operator/=(const BigRational& o) {
        require(o.q_ != 0, "division by zero", "rational divide");
        q_ /= o.q_;
        return *this;
    }

    friend BigRational operator+(BigRational a, const BigRational& b) { return a += b; }
    friend BigRational operator-(BigRational a, const BigRational& b) { return a -= b; }
    friend BigRational operator*(BigRational a, const BigRational& b) { return a *= b; }
    friend BigRational operator/(BigRational a, const BigRational& b) { return a /= b; }
    friend BigRational operator-(const BigRational& a) { return BigRational(mpq_class(-a.q_)); }

    friend bool operator==(const BigRational& a, const BigRational& b) { return a.q_ == b.q_; }
    friend bool operator!=(const BigRational& a, const BigRational& b) { return a.q_ != b.q_; }
    friend bool operator<(const BigRational& a, const BigRational& b) { return a.q_ < b.q_; }

    bool is_zero() const { return q_ == 0; }
    double to_double() const { return q_.get_d(); }

    // "p/q" (or just "p" when q == 1), matching the CLI table format.
    std::string str() const {
        if (q_.get_den() == 1) return q_.get_num().get_str();
        return q_.get_num().get_str() + "/" + q_.get_den().get_str();
    }

    std::string numerator_str() const { return q_.get_num().get_str(); }
    std::string denominator_str() const { return q_.get_den().get_str(); }

    // Integer power with negative exponents allowed.
    BigRational pow(long e) const {
        if (e == 0) return BigRational(1);
        mpq_class base = q_;
        if (e < 0) {
            require(q_ != 0, "division by zero", "0^negative");
            base = 1 / base;
            e = -e;
        }
        mpq_class acc(1);
        for (long i = 0; i < e; ++i) acc *= base;
        return BigRational(acc);
    }

    const mpq_class& raw() const { return q_; }

private:
    mpq_class q_;
};

// Parses a decimal literal ("0.125", "-3", "2e-3") into an exact rational.
// JSON configs carry couplings in decimal; the oracle keeps them exact.
inline BigRational rational_from_decimal(const std::string& text) {
    std::string s = text;
    long exp10 = 0;
    auto epos = s.find_first_of("eE");
    if (epos != std::string::npos) {
        exp10 = std::stol(s.substr(epos + 1));
        s = s.substr(0, epos);
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        exp10 -= static_cast<long>(s.size() - dot - 1);
        s.erase(dot, 1);
    }
    if (s.empty() || s == "-" || s == "+") throw Error("parse error", "bad decimal: " + text);
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw Error("parse error", "bad decimal: " + text);
    mpz_class shift;
    mpz_ui_pow_ui(shift.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
    if (exp10 >= 0) q *= shift; else q /= shift;
    q.canonicalize();
    return BigRational(q);
}

}  // namespace btrengine
