// Finite-difference oracle for the backward pass, shared by the unit and
// acceptance suites. Central differences with h = 1e-5 over every
// parameter entry; relative error uses a small absolute floor so that
// near-zero gradient pairs compare absolutely.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "averl/net.hpp"

namespace oracle {

inline double max_relative_grad_error(averl::NetworkParameters params,
                                      const Eigen::VectorXd& x, int action, double target) {
    const averl::BackwardResult analytic = averl::backward(params, x, action, target);
    const double h = 1e-5;
    double worst = 0.0;
    auto loss_at = [&](const averl::NetworkParameters& p) {
        const double err = averl::forward(p, x)(action) - target;
        return 0.5 * err * err;
    };
    auto check_entry = [&](double& p, double g) {
        const double saved = p;
        p = saved + h;
        const double up = loss_at(params);
        p = saved - h;
        const double down = loss_at(params);
        p = saved;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(g), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(g - numeric) / denom);
    };

    // walk parameter tensors in lockstep with their gradients
    std::vector<Eigen::MatrixXd*> mats;
    std::vector<const Eigen::MatrixXd*> mat_grads;
    std::vector<Eigen::VectorXd*> vecs;
    std::vector<const Eigen::VectorXd*> vec_grads;
    for (std::size_t l = 0; l < params.trunk.size(); ++l) {
        mats.push_back(&params.trunk[l].w);
        mat_grads.push_back(&analytic.grads.trunk[l].w);
        vecs.push_back(&params.trunk[l].b);
        vec_grads.push_back(&analytic.grads.trunk[l].b);
    }
    mats.push_back(&params.value_head.w);
    mat_grads.push_back(&analytic.grads.value_head.w);
    vecs.push_back(&params.value_head.b);
    vec_grads.push_back(&analytic.grads.value_head.b);
    mats.push_back(&params.adv_head.w);
    mat_grads.push_back(&analytic.grads.adv_head.w);
    vecs.push_back(&params.adv_head.b);
    vec_grads.push_back(&analytic.grads.adv_head.b);

    for (std::size_t i = 0; i < mats.size(); ++i)
        for (int r = 0; r < mats[i]->rows(); ++r)
            for (int c = 0; c < mats[i]->cols(); ++c)
                check_entry((*mats[i])(r, c), (*mat_grads[i])(r, c));
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (int r = 0; r < vecs[i]->size(); ++r)
            check_entry((*vecs[i])(r), (*vec_grads[i])(r));
    return worst;
}

}  // namespace oracle
