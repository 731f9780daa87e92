#include "ksub/base_model.hpp"

#include <cmath>

#include "ksub/errors.hpp"

namespace ksub {

HadamardModel HadamardModel::poincare_disk(double a) {
    HadamardModel m;
    m.domain = ChartDomain::UnitDisk;
    m.curvature_bound = -a * a;
    m.complete = true;
    m.radial_chart_rays = true;
    m.name = "poincare(a=" + std::to_string(a) + ")";
    const double log2a = std::log(2.0 / a);
    m.log_lambda_ = [log2a](double x, double y) {
        Jet2 xj = Jet2::var_x(x), yj = Jet2::var_y(y);
        return log2a - log(1.0 - xj * xj - yj * yj);
    };
    return m;
}

HadamardModel HadamardModel::from_expression(const std::string& lambda_expr,
                                             ChartDomain domain,
                                             double curvature_bound,
                                             bool declared_complete) {
    Expression ex = Expression::parse(lambda_expr);
    HadamardModel m;
    m.domain = domain;
    m.curvature_bound = curvature_bound;
    m.complete = declared_complete;
    m.radial_chart_rays = false;
    m.name = "custom(" + lambda_expr + ")";
    m.log_lambda_ = [ex](double x, double y) { return log(ex.eval_jet(x, y)); };
    return m;
}

double HadamardModel::max_curvature_on_grid(int n) const {
    double worst = -1e300;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double u = -0.95 + 1.9 * i / (n - 1);
            double v = -0.95 + 1.9 * j / (n - 1);
            Point2 p{u, v};
            if (domain == ChartDomain::UnitDisk && u * u + v * v >= 0.95 * 0.95) continue;
            worst = std::max(worst, gauss_curvature(p));
        }
    }
    return worst;
}

} // namespace ksub
