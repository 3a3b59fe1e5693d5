#include "rcons/secret_sharing.hpp"

#include <set>

namespace rcons {

bool is_prime(std::uint64_t v) {
  if (v < 2) return false;
  if (v % 2 == 0) return v == 2;
  for (std::uint64_t d = 3; d * d <= v; d += 2) {
    if (v % d == 0) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint64_t modulus) : p_(modulus) {
  if (modulus >= (std::uint64_t{1} << 32)) throw std::domain_error("field modulus must be below 2^32");
  if (!is_prime(modulus)) throw std::domain_error("field modulus must be prime");
}

FieldElement PrimeField::element(std::uint64_t v) const {
  if (v >= p_) throw std::domain_error("value " + std::to_string(v) + " outside field");
  return {v};
}

FieldElement PrimeField::inverse(FieldElement a) const {
  if (a.value == 0) throw std::domain_error("zero has no inverse");
  // a^(p-2)
  std::uint64_t result = 1, base = a.value, e = p_ - 2;
  while (e > 0) {
    if (e & 1) result = result * base % p_;
    base = base * base % p_;
    e >>= 1;
  }
  return {result};
}

LinearPolynomial make_polynomial(const PrimeField& field, FieldElement secret, Rng& rng) {
  field.element(secret.value);
  return {secret, field.random(rng)};
}

FieldElement evaluate(const PrimeField& field, const LinearPolynomial& poly, std::uint64_t x) {
  return field.add(poly.constant, field.mul(poly.slope, {x % field.modulus()}));
}

Share share_for(const PrimeField& field, const LinearPolynomial& poly, AgentId id) {
  if (id <= 0) throw std::domain_error("share evaluation point must be a positive agent id");
  if (static_cast<std::uint64_t>(id) >= field.modulus()) throw std::domain_error("agent id not embeddable in field");
  return {id, evaluate(field, poly, static_cast<std::uint64_t>(id))};
}

FieldElement reconstruct(const PrimeField& field, std::span<const Share> shares) {
  if (shares.size() < 2) throw SharingError(SharingError::Kind::InsufficientShares, "need at least two shares");
  std::set<AgentId> owners;
  for (const Share& s : shares) {
    if (!owners.insert(s.owner).second) {
      throw SharingError(SharingError::Kind::DuplicateOwner, "duplicate share owner " + std::to_string(s.owner));
    }
  }
  const Share& a = shares[0];
  const Share& b = shares[1];
  const FieldElement xa = field.element(static_cast<std::uint64_t>(a.owner));
  const FieldElement xb = field.element(static_cast<std::uint64_t>(b.owner));
  const FieldElement slope = field.mul(field.sub(b.value, a.value), field.inverse(field.sub(xb, xa)));
  const LinearPolynomial line{field.sub(a.value, field.mul(slope, xa)), slope};
  for (std::size_t k = 2; k < shares.size(); ++k) {
    if (evaluate(field, line, static_cast<std::uint64_t>(shares[k].owner)) != shares[k].value) {
      throw SharingError(SharingError::Kind::Inconsistent,
                         "share of agent " + std::to_string(shares[k].owner) + " is off the line");
    }
  }
  return line.constant;
}

}  // namespace rcons
