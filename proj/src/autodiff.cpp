#include "absa/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "absa/errors.hpp"

namespace absa::ad {

void Var::zero_grad() {
    if (!node_) return;
    if (!node_->has_grad) {
        node_->grad = Tensor::zeros(node_->value.shape());
        node_->has_grad = true;
    } else {
        node_->grad.fill(0.0);
    }
}

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
}

Var constant(Tensor value) { return leaf(std::move(value), false); }

void accumulate_grad(const std::shared_ptr<Node>& n, const Tensor& g) {
    if (!n->requires_grad) return;
    if (!n->has_grad) {
        n->grad = Tensor::zeros(n->value.shape());
        n->has_grad = true;
    }
    double* dst = n->grad.data();
    const double* src = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

Var make_op(std::string op, std::vector<Var> parents, Tensor value,
            std::function<void(Node&)> backprop) {
    if (!value.all_finite())
        throw NumericsError(op + ": produced non-finite values");
    auto n = std::make_shared<Node>();
    n->op = std::move(op);
    n->value = std::move(value);
    for (auto& p : parents) {
        n->parents.push_back(p.node());
        if (p.requires_grad()) n->requires_grad = true;
    }
    if (n->requires_grad) n->backprop = std::move(backprop);
    return Var(std::move(n));
}

static void require_same_shape(const char* op, const Var& a, const Var& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " do not match");
}

// --- arithmetic -------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    const Tensor& ta = a.value();
    const Tensor& tb = b.value();
    if (ta.shape() == tb.shape()) {
        Tensor out = ta;
        for (std::size_t i = 0; i < out.size(); ++i) out.at(i) += tb.at(i);
        return make_op("add", {a, b}, std::move(out), [](Node& n) {
            accumulate_grad(n.parents[0], n.grad);
            accumulate_grad(n.parents[1], n.grad);
        });
    }
    if (ta.rank() == 2 && tb.rows() == 1 && tb.cols() == ta.cols()) {
        // row-vector bias broadcast over rows — the only broadcast supported
        Tensor out = ta;
        std::size_t r = ta.rows(), c = ta.cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out.at(i, j) += tb.at(j);
        return make_op("add", {a, b}, std::move(out), [r, c](Node& n) {
            accumulate_grad(n.parents[0], n.grad);
            if (n.parents[1]->requires_grad) {
                Tensor gb = Tensor::zeros(n.parents[1]->value.shape());
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gb.at(j) += n.grad.at(i, j);
                accumulate_grad(n.parents[1], gb);
            }
        });
    }
    throw ShapeError("add: shapes " + shape_str(ta.shape()) + " and " + shape_str(tb.shape()) +
                     " do not match (only row-vector bias broadcast is supported)");
}

Var sub(const Var& a, const Var& b) {
    require_same_shape("sub", a, b);
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) -= b.value().at(i);
    return make_op("sub", {a, b}, std::move(out), [](Node& n) {
        accumulate_grad(n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor gb = n.grad;
            for (std::size_t i = 0; i < gb.size(); ++i) gb.at(i) = -gb.at(i);
            accumulate_grad(n.parents[1], gb);
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape("mul", a, b);
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= b.value().at(i);
    return make_op("mul", {a, b}, std::move(out), [](Node& n) {
        if (n.parents[0]->requires_grad) {
            Tensor ga = n.grad;
            const Tensor& vb = n.parents[1]->value;
            for (std::size_t i = 0; i < ga.size(); ++i) ga.at(i) *= vb.at(i);
            accumulate_grad(n.parents[0], ga);
        }
        if (n.parents[1]->requires_grad) {
            Tensor gb = n.grad;
            const Tensor& va = n.parents[0]->value;
            for (std::size_t i = 0; i < gb.size(); ++i) gb.at(i) *= va.at(i);
            accumulate_grad(n.parents[1], gb);
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) *= c;
    return make_op("scale", {a}, std::move(out), [c](Node& n) {
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i) g.at(i) *= c;
        accumulate_grad(n.parents[0], g);
    });
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& ta = a.value();
    const Tensor& tb = b.value();
    if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows())
        throw ShapeError("matmul: shapes " + shape_str(ta.shape()) + " and " +
                         shape_str(tb.shape()) + " do not conform");
    std::size_t n = ta.rows(), k = ta.cols(), m = tb.cols();
    Tensor out(Shape{n, m});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            double av = ta.at(i, p);
            if (av == 0.0) continue;
            const double* brow = tb.data() + p * m;
            double* orow = out.data() + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    return make_op("matmul", {a, b}, std::move(out), [n, k, m](Node& nd) {
        const Tensor& va = nd.parents[0]->value;
        const Tensor& vb = nd.parents[1]->value;
        if (nd.parents[0]->requires_grad) {
            Tensor ga(Shape{n, k});  // g · bᵀ
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    double gv = nd.grad.at(i, j);
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) ga.at(i, p) += gv * vb.at(p, j);
                }
            accumulate_grad(nd.parents[0], ga);
        }
        if (nd.parents[1]->requires_grad) {
            Tensor gb(Shape{k, m});  // aᵀ · g
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double av = va.at(i, p);
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < m; ++j) gb.at(p, j) += av * nd.grad.at(i, j);
                }
            accumulate_grad(nd.parents[1], gb);
        }
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    const Tensor& ta = a.value();
    const Tensor& tb = b.value();
    if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.cols())
        throw ShapeError("matmul_nt: shapes " + shape_str(ta.shape()) + " and " +
                         shape_str(tb.shape()) + " do not conform");
    std::size_t n = ta.rows(), k = ta.cols(), m = tb.rows();
    Tensor out(Shape{n, m});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double* arow = ta.data() + i * k;
            const double* brow = tb.data() + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            out.at(i, j) = s;
        }
    return make_op("matmul_nt", {a, b}, std::move(out), [n, k, m](Node& nd) {
        const Tensor& va = nd.parents[0]->value;
        const Tensor& vb = nd.parents[1]->value;
        if (nd.parents[0]->requires_grad) {
            Tensor ga(Shape{n, k});  // g · b
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    double gv = nd.grad.at(i, j);
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) ga.at(i, p) += gv * vb.at(j, p);
                }
            accumulate_grad(nd.parents[0], ga);
        }
        if (nd.parents[1]->requires_grad) {
            Tensor gb(Shape{m, k});  // gᵀ · a
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    double gv = nd.grad.at(i, j);
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) gb.at(j, p) += gv * va.at(i, p);
                }
            accumulate_grad(nd.parents[1], gb);
        }
    });
}

// --- elementwise nonlinearities ----------------------------------------------

Var tanh(const Var& a) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(out.at(i));
    return make_op("tanh", {a}, std::move(out), [](Node& n) {
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = n.value.at(i);
            g.at(i) *= 1.0 - y * y;
        }
        accumulate_grad(n.parents[0], g);
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = 1.0 / (1.0 + std::exp(-out.at(i)));
    return make_op("sigmoid", {a}, std::move(out), [](Node& n) {
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = n.value.at(i);
            g.at(i) *= y * (1.0 - y);
        }
        accumulate_grad(n.parents[0], g);
    });
}

Var relu(const Var& a) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = out.at(i) > 0.0 ? out.at(i) : 0.0;
    return make_op("relu", {a}, std::move(out), [](Node& n) {
        Tensor g = n.grad;
        const Tensor& x = n.parents[0]->value;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x.at(i) <= 0.0) g.at(i) = 0.0;
        accumulate_grad(n.parents[0], g);
    });
}

Var softmax(const Var& a) {
    const Tensor& x = a.value();
    Tensor out = x;
    std::size_t r = x.rows(), c = x.cols();
    for (std::size_t i = 0; i < r; ++i) {
        double* rowp = out.data() + i * c;
        double m = rowp[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, rowp[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            rowp[j] = std::exp(rowp[j] - m);
            z += rowp[j];
        }
        for (std::size_t j = 0; j < c; ++j) rowp[j] /= z;
    }
    return make_op("softmax", {a}, std::move(out), [r, c](Node& n) {
        Tensor g(n.value.shape());
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j)
                dot += n.grad.data()[i * c + j] * n.value.data()[i * c + j];
            for (std::size_t j = 0; j < c; ++j) {
                double y = n.value.data()[i * c + j];
                g.data()[i * c + j] = y * (n.grad.data()[i * c + j] - dot);
            }
        }
        accumulate_grad(n.parents[0], g);
    });
}

// --- reductions ---------------------------------------------------------------

Var sum(const Var& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value().at(i);
    return make_op("sum", {a}, Tensor::scalar(s), [](Node& n) {
        Tensor g = Tensor::full(n.parents[0]->value.shape(), n.grad.at(0));
        accumulate_grad(n.parents[0], g);
    });
}

Var mean(const Var& a) {
    double s = 0.0;
    std::size_t n = a.value().size();
    for (std::size_t i = 0; i < n; ++i) s += a.value().at(i);
    return make_op("mean", {a}, Tensor::scalar(s / static_cast<double>(n)), [n](Node& nd) {
        Tensor g = Tensor::full(nd.parents[0]->value.shape(),
                                nd.grad.at(0) / static_cast<double>(n));
        accumulate_grad(nd.parents[0], g);
    });
}

// --- structural ops -------------------------------------------------------------

Var row(const Var& a, std::size_t r) {
    const Tensor& x = a.value();
    if (x.rank() != 2 || r >= x.rows())
        throw ShapeError("row: index " + std::to_string(r) + " out of range for shape " +
                         shape_str(x.shape()));
    std::size_t c = x.cols();
    Tensor out(Shape{c});
    for (std::size_t j = 0; j < c; ++j) out.at(j) = x.at(r, j);
    return make_op("row", {a}, std::move(out), [r, c](Node& n) {
        Tensor g = Tensor::zeros(n.parents[0]->value.shape());
        for (std::size_t j = 0; j < c; ++j) g.at(r, j) = n.grad.at(j);
        accumulate_grad(n.parents[0], g);
    });
}

Var slice_cols(const Var& a, std::size_t c0, std::size_t c1) {
    const Tensor& x = a.value();
    if (c0 >= c1 || c1 > x.cols())
        throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") invalid for shape " + shape_str(x.shape()));
    std::size_t r = x.rows(), w = c1 - c0;
    Tensor out(x.rank() == 2 ? Shape{r, w} : Shape{w});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < w; ++j) out.data()[i * w + j] = x.at(i, c0 + j);
    return make_op("slice_cols", {a}, std::move(out), [r, w, c0](Node& n) {
        Tensor g = Tensor::zeros(n.parents[0]->value.shape());
        std::size_t c = g.cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < w; ++j) g.data()[i * c + c0 + j] = n.grad.data()[i * w + j];
        accumulate_grad(n.parents[0], g);
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    std::size_t r = parts[0].value().rows();
    std::size_t rank = parts[0].value().rank();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.value().rows() != r || p.value().rank() != rank)
            throw ShapeError("concat_cols: shapes " + shape_str(parts[0].shape()) + " and " +
                             shape_str(p.shape()) + " do not align");
        total += p.value().cols();
    }
    Tensor out(rank == 2 ? Shape{r, total} : Shape{total});
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::size_t c = p.value().cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                out.data()[i * total + off + j] = p.value().data()[i * c + j];
        off += c;
    }
    std::vector<std::size_t> widths;
    for (const auto& p : parts) widths.push_back(p.value().cols());
    return make_op("concat_cols", parts, std::move(out), [r, total, widths](Node& n) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
            if (n.parents[k]->requires_grad) {
                Tensor g = Tensor::zeros(n.parents[k]->value.shape());
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < widths[k]; ++j)
                        g.data()[i * widths[k] + j] = n.grad.data()[i * total + off + j];
                accumulate_grad(n.parents[k], g);
            }
            off += widths[k];
        }
    });
}

Var embedding_lookup(const Var& table, const std::vector<int>& ids) {
    const Tensor& e = table.value();
    if (e.rank() != 2) throw ShapeError("embedding_lookup: table must be rank 2");
    std::size_t v = e.rows(), d = e.cols();
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw ShapeError("embedding_lookup: id " + std::to_string(id) + " out of range [0," +
                             std::to_string(v) + ")");
    Tensor out(Shape{ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(e.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
    return make_op("embedding_lookup", {table}, std::move(out), [ids, d](Node& n) {
        Tensor g = Tensor::zeros(n.parents[0]->value.shape());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            double* dst = g.data() + static_cast<std::size_t>(ids[i]) * d;
            const double* src = n.grad.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
        accumulate_grad(n.parents[0], g);
    });
}

// --- losses ---------------------------------------------------------------------

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& targets) {
    const Tensor& x = logits.value();
    std::size_t r = x.rows(), c = x.cols();
    if (targets.size() != r)
        throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_str(x.shape()));
    for (int t : targets)
        if (t < 0 || static_cast<std::size_t>(t) >= c)
            throw ShapeError("softmax_cross_entropy: target " + std::to_string(t) +
                             " out of range [0," + std::to_string(c) + ")");
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        const double* rowp = x.data() + i * c;
        double m = rowp[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, rowp[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(rowp[j] - m);
        total += m + std::log(z) - rowp[static_cast<std::size_t>(targets[i])];
    }
    double loss = total / static_cast<double>(r);
    return make_op("softmax_cross_entropy", {logits}, Tensor::scalar(loss),
                   [targets, r, c](Node& n) {
                       const Tensor& x = n.parents[0]->value;
                       Tensor g(Shape{r, c});
                       double gscale = n.grad.at(0) / static_cast<double>(r);
                       for (std::size_t i = 0; i < r; ++i) {
                           const double* rowp = x.data() + i * c;
                           double m = rowp[0];
                           for (std::size_t j = 1; j < c; ++j) m = std::max(m, rowp[j]);
                           double z = 0.0;
                           for (std::size_t j = 0; j < c; ++j) z += std::exp(rowp[j] - m);
                           for (std::size_t j = 0; j < c; ++j)
                               g.at(i, j) = gscale * std::exp(rowp[j] - m) / z;
                           g.at(i, static_cast<std::size_t>(targets[i])) -= gscale;
                       }
                       accumulate_grad(n.parents[0], g);
                   });
}

Var mse(const Var& pred, const Var& target) {
    require_same_shape("mse", pred, target);
    std::size_t n = pred.value().size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = pred.value().at(i) - target.value().at(i);
        s += d * d;
    }
    return make_op("mse", {pred, target}, Tensor::scalar(s / static_cast<double>(n)),
                   [n](Node& nd) {
                       const Tensor& p = nd.parents[0]->value;
                       const Tensor& t = nd.parents[1]->value;
                       double gscale = 2.0 * nd.grad.at(0) / static_cast<double>(n);
                       if (nd.parents[0]->requires_grad) {
                           Tensor g(p.shape());
                           for (std::size_t i = 0; i < n; ++i)
                               g.at(i) = gscale * (p.at(i) - t.at(i));
                           accumulate_grad(nd.parents[0], g);
                       }
                       if (nd.parents[1]->requires_grad) {
                           Tensor g(t.shape());
                           for (std::size_t i = 0; i < n; ++i)
                               g.at(i) = -gscale * (p.at(i) - t.at(i));
                           accumulate_grad(nd.parents[1], g);
                       }
                   });
}

Var dropout(const Var& x, const Var& mask) {
    if (mask.requires_grad())
        throw ConfigError("dropout: mask must be an explicit constant, not a differentiable node");
    require_same_shape("dropout", x, mask);
    return mul(x, mask);
}

// --- time pooling -----------------------------------------------------------------

static void check_pool_args(const char* op, const Tensor& hs, std::size_t length) {
    if (hs.rank() != 2) throw ShapeError(std::string(op) + ": states must be [T,H]");
    if (length == 0) throw ShapeError(std::string(op) + ": length 0");
    if (length > hs.rows())
        throw ShapeError(std::string(op) + ": length " + std::to_string(length) +
                         " exceeds " + std::to_string(hs.rows()) + " steps");
}

Var max_over_time(const Var& hs, std::size_t length) {
    const Tensor& x = hs.value();
    check_pool_args("max_over_time", x, length);
    std::size_t t0 = x.rows() - length, h = x.cols();
    Tensor out(Shape{h});
    std::vector<std::size_t> argmax(h);
    for (std::size_t j = 0; j < h; ++j) {
        double best = x.at(t0, j);
        std::size_t bi = t0;
        for (std::size_t t = t0 + 1; t < x.rows(); ++t)
            if (x.at(t, j) > best) {
                best = x.at(t, j);
                bi = t;
            }
        out.at(j) = best;
        argmax[j] = bi;
    }
    return make_op("max_over_time", {hs}, std::move(out), [argmax, h](Node& n) {
        Tensor g = Tensor::zeros(n.parents[0]->value.shape());
        for (std::size_t j = 0; j < h; ++j) g.at(argmax[j], j) = n.grad.at(j);
        accumulate_grad(n.parents[0], g);
    });
}

Var mean_over_time(const Var& hs, std::size_t length) {
    const Tensor& x = hs.value();
    check_pool_args("mean_over_time", x, length);
    std::size_t t0 = x.rows() - length, h = x.cols();
    Tensor out(Shape{h});
    for (std::size_t j = 0; j < h; ++j) {
        double s = 0.0;
        for (std::size_t t = t0; t < x.rows(); ++t) s += x.at(t, j);
        out.at(j) = s / static_cast<double>(length);
    }
    return make_op("mean_over_time", {hs}, std::move(out), [t0, h, length](Node& n) {
        Tensor g = Tensor::zeros(n.parents[0]->value.shape());
        double inv = 1.0 / static_cast<double>(length);
        for (std::size_t j = 0; j < h; ++j)
            for (std::size_t t = t0; t < g.rows(); ++t) g.at(t, j) = n.grad.at(j) * inv;
        accumulate_grad(n.parents[0], g);
    });
}

Var concat_pool(const Var& hs, std::size_t length) {
    check_pool_args("concat_pool", hs.value(), length);
    Var last = row(hs, hs.value().rows() - 1);
    return concat_cols({last, max_over_time(hs, length), mean_over_time(hs, length)});
}

Var concat_pool_steps(const std::vector<Var>& steps, const std::vector<std::size_t>& lengths) {
    if (steps.empty()) throw ShapeError("concat_pool_steps: no steps");
    std::size_t t_total = steps.size();
    std::size_t b = steps[0].value().rows(), h = steps[0].value().cols();
    for (const auto& s : steps)
        if (s.value().rows() != b || s.value().cols() != h)
            throw ShapeError("concat_pool_steps: inconsistent step shapes");
    if (lengths.size() != b) throw ShapeError("concat_pool_steps: lengths size mismatch");
    for (std::size_t len : lengths)
        if (len == 0 || len > t_total)
            throw ShapeError("concat_pool_steps: length " + std::to_string(len) +
                             " invalid for " + std::to_string(t_total) + " steps");

    Tensor out(Shape{b, 3 * h});
    std::vector<std::size_t> argmax(b * h);
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t t0 = t_total - lengths[i];
        for (std::size_t j = 0; j < h; ++j) {
            out.at(i, j) = steps[t_total - 1].value().at(i, j);  // last
            double best = steps[t0].value().at(i, j);
            std::size_t bi = t0;
            double s = 0.0;
            for (std::size_t t = t0; t < t_total; ++t) {
                double v = steps[t].value().at(i, j);
                s += v;
                if (v > best) {
                    best = v;
                    bi = t;
                }
            }
            out.at(i, h + j) = best;
            out.at(i, 2 * h + j) = s / static_cast<double>(lengths[i]);
            argmax[i * h + j] = bi;
        }
    }
    return make_op("concat_pool_steps", steps, std::move(out),
                   [t_total, b, h, lengths, argmax](Node& n) {
                       std::vector<Tensor> gs(t_total);
                       for (auto& g : gs) g = Tensor::zeros(Shape{b, h});
                       for (std::size_t i = 0; i < b; ++i) {
                           std::size_t t0 = t_total - lengths[i];
                           double inv = 1.0 / static_cast<double>(lengths[i]);
                           for (std::size_t j = 0; j < h; ++j) {
                               gs[t_total - 1].at(i, j) += n.grad.at(i, j);
                               gs[argmax[i * h + j]].at(i, j) += n.grad.at(i, h + j);
                               for (std::size_t t = t0; t < t_total; ++t)
                                   gs[t].at(i, j) += n.grad.at(i, 2 * h + j) * inv;
                           }
                       }
                       for (std::size_t t = 0; t < t_total; ++t)
                           accumulate_grad(n.parents[t], gs[t]);
                   });
}

// --- backward ------------------------------------------------------------------

void backward(const Var& loss) {
    if (!loss.valid()) throw ShapeError("backward: invalid var");
    Node* root = loss.node().get();
    if (!loss.value().is_scalar())
        throw ShapeError("backward: loss has shape " + shape_str(loss.shape()) +
                         ", expected a scalar");
    if (root->backward_done)
        throw Error("backward: already ran on this graph; double backward is not supported");
    if (!root->requires_grad) {
        root->backward_done = true;
        return;  // nothing depends on parameters
    }

    // iterative post-order topological sort over the requires_grad subgraph
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    accumulate_grad(loss.node(), Tensor::scalar(1.0));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->has_grad) n->backprop(*n);
    }
    root->backward_done = true;
}

// --- gradient check ---------------------------------------------------------------

double gradient_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double eps) {
    if (!(eps > 0.0 && eps <= 1e-3))
        throw ConfigError("gradient_check: eps must be in (0, 1e-3], got " + std::to_string(eps));

    auto eval = [&fn](const std::vector<Tensor>& ts, bool with_grad) {
        std::vector<Var> vars;
        vars.reserve(ts.size());
        for (const auto& t : ts) vars.push_back(leaf(t, with_grad));
        Var y = fn(vars);
        if (!y.value().is_scalar())
            throw ShapeError("gradient_check: fn returned shape " + shape_str(y.shape()) +
                             ", expected a scalar");
        return std::make_pair(y, vars);
    };

    auto [y0, leaves] = eval(inputs, true);
    auto [y1, leaves1] = eval(inputs, true);
    if (y0.value().at(0) != y1.value().at(0))
        throw ConfigError(
            "gradient_check: fn is non-deterministic; dropout must use explicit masks");

    backward(y0);
    std::vector<Tensor> analytic;
    for (auto& l : leaves)
        analytic.push_back(l.has_grad() ? l.grad() : Tensor::zeros(l.value().shape()));

    double max_err = 0.0;
    std::vector<Tensor> work = inputs;
    for (std::size_t i = 0; i < work.size(); ++i) {
        for (std::size_t j = 0; j < work[i].size(); ++j) {
            double saved = work[i].at(j);
            work[i].at(j) = saved + eps;
            double fp = eval(work, false).first.value().at(0);
            work[i].at(j) = saved - eps;
            double fm = eval(work, false).first.value().at(0);
            work[i].at(j) = saved;
            double numeric = (fp - fm) / (2.0 * eps);
            double a = analytic[i].at(j);
            double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
            max_err = std::max(max_err, std::abs(a - numeric) / denom);
        }
    }
    return max_err;
}

}  // namespace absa::ad
