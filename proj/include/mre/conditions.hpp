#pragma once

#include <string>
#include <vector>

#include "mre/measure.hpp"

namespace mre {

enum class Verdict { Pass, Fail, Inconclusive };

std::string to_string(Verdict v);

struct ConditionReport {
    std::string condition;  // "B", "E" or "strip"
    Verdict verdict = Verdict::Inconclusive;
    std::string note;

    // B: ||(L mu_s(vartheta))^m|| for m = 1, 2, ...
    std::vector<double> norms;
    int m_used = 0;

    // E: final scan grid and norms of (I - L mu(vartheta + i eta))^{-1}
    std::vector<double> eta;
    std::vector<double> eta_norms;
    double supremum = 0.0;
    double eta_max = 0.0;
    int refinements = 0;

    // strip: zeros of the determinant in the strip rectangle
    int zero_count = 0;
};

/// Pass if ||L((mu^{*m})_s)(vartheta)|| < 1 for some m <= m_max. For this family
/// (mu^{*m})_s = (mu_s)^{*m}, whose transform is the m-th matrix power.
ConditionReport check_B(const MeasureMatrix& m, double vartheta, int m_max);

/// Scans ||(I - L mu(vartheta + i eta))^{-1}|| for eta in [0, eta_max], doubling
/// the grid until the supremum is stable within 5%. Throws RootOnLineError if a
/// zero of the determinant lies on (or within 1e-6 of) the line Re z = vartheta.
ConditionReport check_E(const MeasureMatrix& m, double vartheta, double eta_max, int n_grid);

/// Zero count in (theta1, theta2] x [-im_max, im_max]; pass iff zero.
ConditionReport check_strip_empty(const MeasureMatrix& m, double theta1, double theta2, double im_max);

}  // namespace mre
