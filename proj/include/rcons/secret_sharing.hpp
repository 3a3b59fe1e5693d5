#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "rcons/types.hpp"

namespace rcons {

struct FieldElement {
  std::uint64_t value = 0;
  friend bool operator==(FieldElement, FieldElement) = default;
  friend auto operator<=>(FieldElement, FieldElement) = default;
};

// Arithmetic modulo a prime below 2^32, so products fit in 64 bits.
class PrimeField {
 public:
  static constexpr std::uint64_t kDefaultModulus = 2147483647;  // 2^31 - 1

  explicit PrimeField(std::uint64_t modulus = kDefaultModulus);

  std::uint64_t modulus() const { return p_; }

  // Throws std::domain_error when v >= p.
  FieldElement element(std::uint64_t v) const;

  FieldElement add(FieldElement a, FieldElement b) const { return {(a.value + b.value) % p_}; }
  FieldElement sub(FieldElement a, FieldElement b) const { return {(a.value + p_ - b.value) % p_}; }
  FieldElement mul(FieldElement a, FieldElement b) const { return {(a.value * b.value) % p_}; }
  FieldElement inverse(FieldElement a) const;
  FieldElement random(Rng& rng) const { return {uniform_below(rng, p_)}; }

 private:
  std::uint64_t p_;
};

bool is_prime(std::uint64_t v);

// q(x) = constant + slope * x
struct LinearPolynomial {
  FieldElement constant;
  FieldElement slope;
  friend bool operator==(const LinearPolynomial&, const LinearPolynomial&) = default;
};

struct Share {
  AgentId owner = 0;  // evaluation point
  FieldElement value;
  friend bool operator==(const Share&, const Share&) = default;
};

class SharingError : public std::runtime_error {
 public:
  enum class Kind { InsufficientShares, DuplicateOwner, Inconsistent };
  SharingError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

LinearPolynomial make_polynomial(const PrimeField& field, FieldElement secret, Rng& rng);

FieldElement evaluate(const PrimeField& field, const LinearPolynomial& poly, std::uint64_t x);

// Evaluation at the owner's id. id 0 would hand out the secret itself.
Share share_for(const PrimeField& field, const LinearPolynomial& poly, AgentId id);

// Interpolates the line through the first two shares and evaluates at 0.
// Every further share must lie on the same line.
FieldElement reconstruct(const PrimeField& field, std::span<const Share> shares);

}  // namespace rcons
