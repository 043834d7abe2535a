#include "sshg/fields.hpp"

#include "sshg/errors.hpp"

namespace sshg {

namespace {
template <class V>
void check_same(const V& a, const V& b) {
  if (a.size() != b.size()) fail(ErrorKind::shape, "field size mismatch");
}
}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& o) { return axpy(1.0, o); }
ScalarField& ScalarField::operator-=(const ScalarField& o) { return axpy(-1.0, o); }

ScalarField& ScalarField::operator*=(double a) {
  for (auto& v : values) v *= a;
  return *this;
}

ScalarField& ScalarField::axpy(double a, const ScalarField& x) {
  check_same(values, x.values);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += a * x.values[i];
  return *this;
}

SpinorField& SpinorField::operator+=(const SpinorField& o) { return axpy(1.0, o); }
SpinorField& SpinorField::operator-=(const SpinorField& o) { return axpy(-1.0, o); }

SpinorField& SpinorField::operator*=(double a) {
  for (auto& c : coeffs) c *= a;
  return *this;
}

SpinorField& SpinorField::axpy(double a, const SpinorField& x) {
  check_same(coeffs, x.coeffs);
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += a * x.coeffs[i];
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }
SpinorField operator+(SpinorField a, const SpinorField& b) { return a += b; }
SpinorField operator-(SpinorField a, const SpinorField& b) { return a -= b; }
SpinorField operator*(double s, SpinorField a) { return a *= s; }

FieldPair& FieldPair::operator+=(const FieldPair& o) { return axpy(1.0, o); }
FieldPair& FieldPair::operator-=(const FieldPair& o) { return axpy(-1.0, o); }

FieldPair& FieldPair::operator*=(double a) {
  u *= a;
  psi *= a;
  return *this;
}

FieldPair& FieldPair::axpy(double a, const FieldPair& x) {
  u.axpy(a, x.u);
  psi.axpy(a, x.psi);
  return *this;
}

FieldPair operator+(FieldPair a, const FieldPair& b) { return a += b; }
FieldPair operator-(FieldPair a, const FieldPair& b) { return a -= b; }
FieldPair operator*(double s, FieldPair a) { return a *= s; }

}  // namespace sshg
