// Time meshes on [0, T].
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhum {

struct TimeMesh {
  std::vector<double> nodes{0.0, 1.0};
  double grading = 1.0;

  int intervals() const { return static_cast<int>(nodes.size()) - 1; }
  double final_time() const { return nodes.back(); }
  double operator[](int i) const { return nodes[i]; }

  void validate() const {
    if (nodes.size() < 2) throw std::invalid_argument("TimeMesh: need at least one interval");
    if (nodes.front() != 0.0) throw std::invalid_argument("TimeMesh: first node must be 0");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("TimeMesh: nodes must increase strictly");
    }
  }

  /// t_i = T (i/M)^r.
  static TimeMesh graded(double T, int M, double r) {
    if (M < 1 || !(T > 0.0) || !(r >= 1.0)) throw std::invalid_argument("TimeMesh::graded: need M >= 1, T > 0, r >= 1");
    TimeMesh m;
    m.grading = r;
    m.nodes.resize(M + 1);
    for (int i = 0; i <= M; ++i) m.nodes[i] = T * std::pow(static_cast<double>(i) / M, r);
    m.nodes[M] = T;
    return m;
  }

  /// M/2 intervals graded toward 0 with exponent r0 on [0, T/2], mirrored
  /// M/2 intervals graded toward T with exponent r1 on [T/2, T].
  static TimeMesh two_sided(double T, int M, double r0, double r1) {
    if (M < 2 || M % 2 != 0) throw std::invalid_argument("TimeMesh::two_sided: M must be even and >= 2");
    if (!(T > 0.0) || !(r0 >= 1.0) || !(r1 >= 1.0)) throw std::invalid_argument("TimeMesh::two_sided: need T > 0, r0, r1 >= 1");
    const int h = M / 2;
    TimeMesh m;
    m.grading = r0;
    m.nodes.resize(M + 1);
    for (int i = 0; i <= h; ++i) m.nodes[i] = 0.5 * T * std::pow(static_cast<double>(i) / h, r0);
    for (int i = 1; i <= h; ++i) m.nodes[h + i] = T - 0.5 * T * std::pow(static_cast<double>(h - i) / h, r1);
    m.nodes[h] = 0.5 * T;
    m.nodes[M] = T;
    return m;
  }
};

}  // namespace fhum
