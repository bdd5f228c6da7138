#include "dbtrisk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "dbtrisk/errors.hpp"
#include "seeding.hpp"

namespace dbtrisk {

std::string_view to_string(StopReason r) { return r == StopReason::patience ? "patience" : "max_epochs"; }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ContractViolation("learning_rate must be positive");
    if (batch_size == 0) throw ContractViolation("batch_size must be positive");
    if (max_epochs == 0) throw ContractViolation("max_epochs must be positive");
    if (optimizer == Optimizer::adam) {
        if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
            throw ContractViolation("adam betas must lie in [0, 1)");
        if (!(adam_epsilon > 0.0)) throw ContractViolation("adam epsilon must be positive");
    }
    if (workers == 0) throw ContractViolation("workers must be positive");
}

namespace {

struct Matrix {
    std::vector<double> values;  // row-major
    std::size_t dim = 0;
    std::vector<LabelVector> labels;
    std::vector<MaskVector> masks;

    BatchView view() const { return {values, dim, labels, masks}; }
};

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // 1 / sd, or 1 where sd == 0

    static Standardizer identity(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }

    static Standardizer fit(std::span<const Example> data, std::size_t dim) {
        Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
        for (const auto& e : data)
            for (std::size_t i = 0; i < dim; ++i) s.mean[i] += e.x[i];
        const double inv = 1.0 / static_cast<double>(data.size());
        for (auto& m : s.mean) m *= inv;
        for (const auto& e : data)
            for (std::size_t i = 0; i < dim; ++i) {
                const double d = e.x[i] - s.mean[i];
                s.scale[i] += d * d;
            }
        for (auto& v : s.scale) {
            const double sd = std::sqrt(v * inv);
            v = sd > 0.0 ? 1.0 / sd : 1.0;
        }
        return s;
    }
};

Matrix to_matrix(std::span<const Example> data, std::size_t dim, const Standardizer& st) {
    Matrix m;
    m.dim = dim;
    m.values.reserve(data.size() * dim);
    for (const auto& e : data) {
        for (std::size_t i = 0; i < dim; ++i) m.values.push_back((e.x[i] - st.mean[i]) * st.scale[i]);
        m.labels.push_back(e.y);
        m.masks.push_back(e.w);
    }
    return m;
}

void check_examples(std::span<const Example> data, std::size_t dim, const char* name) {
    for (const auto& e : data) {
        if (e.x.size() != dim)
            throw ContractViolation(std::string(name) + " study " + e.study_id + " has feature length " +
                                    std::to_string(e.x.size()) + ", expected " + std::to_string(dim));
        if (std::none_of(e.w.begin(), e.w.end(), [](auto v) { return v != 0; }))
            throw ContractViolation(std::string(name) + " study " + e.study_id + " has an all-zero mask");
    }
}

class OptimizerState {
public:
    OptimizerState(const TrainConfig& cfg, std::size_t n_params) : cfg_(cfg) {
        if (cfg.optimizer == Optimizer::adam) {
            m_.assign(n_params, 0.0);
            v_.assign(n_params, 0.0);
        }
    }

    void step(HazardHead& head, const HeadGradient& g) {
        ++t_;
        auto w = head.weights();
        const std::size_t nw = w.size();
        for (std::size_t i = 0; i < nw; ++i) w[i] -= delta(i, g.weights[i]);
        for (std::size_t k = 0; k < kYears; ++k) head.bias()[k] -= delta(nw + k, g.bias[k]);
    }

private:
    double delta(std::size_t i, double grad) {
        if (cfg_.optimizer == Optimizer::sgd) return cfg_.learning_rate * grad;
        m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grad;
        v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grad * grad;
        const double m_hat = m_[i] / (1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_)));
        const double v_hat = v_[i] / (1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_)));
        return cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_epsilon);
    }

    const TrainConfig& cfg_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

HazardHead fold_standardization(const HazardHead& head, const Standardizer& st) {
    const std::size_t dim = head.input_dim();
    HazardHead raw(dim);
    for (std::size_t k = 0; k < kYears; ++k) {
        double shift = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double w = head.row(k)[i] * st.scale[i];
            raw.row(k)[i] = w;
            shift += w * st.mean[i];
        }
        raw.bias()[k] = head.bias()[k] - shift;
    }
    return raw;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return detail::stream_seed(seed, 0x747261696eULL, stream);
}

YearlyAuroc matrix_auroc(const HazardHead& head, const Matrix& m) {
    PredictionTable rows(m.labels.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].p = forward(head, std::span<const double>(m.values).subspan(i * m.dim, m.dim)).probabilities;
        rows[i].y = m.labels[i];
        rows[i].w = m.masks[i];
    }
    return yearly_auroc(rows);
}

}  // namespace

Dataset make_examples(std::span<const LabeledStudy> studies,
                      const std::function<std::vector<double>(const StudyRecord&)>& features) {
    Dataset out;
    out.reserve(studies.size());
    for (const auto& s : studies) {
        Example e;
        e.study_id = s.record.study_id;
        e.patient_id = s.record.patient_id;
        e.x = features(s.record);
        e.y = s.labels;
        e.w = s.mask;
        e.cohort_kind = s.record.cohort_kind;
        e.density = s.record.density;
        e.split = s.split;
        out.push_back(std::move(e));
    }
    return out;
}

TrainResult train(const TrainConfig& config, std::span<const Example> train_set, std::span<const Example> val_set) {
    config.validate();
    if (train_set.empty()) throw ContractViolation("train: empty training set");
    if (val_set.empty()) throw ContractViolation("train: empty validation set");
    const std::size_t dim = train_set.front().x.size();
    if (dim == 0) throw ContractViolation("train: zero-length feature vectors");
    check_examples(train_set, dim, "train");
    check_examples(val_set, dim, "validation");

    std::vector<CohortKind> kinds;
    kinds.reserve(train_set.size());
    for (const auto& e : train_set) kinds.push_back(e.cohort_kind);
    const auto weights = sampler_weights(kinds);

    const Standardizer st = config.standardize_features ? Standardizer::fit(train_set, dim) : Standardizer::identity(dim);
    const Matrix train_m = to_matrix(train_set, dim, st);
    const Matrix val_m = to_matrix(val_set, dim, st);

    HazardHead head = HazardHead::random_init(dim, derive_seed(config.seed, 0));
    OptimizerState opt(config, head.weights().size() + kYears);
    std::mt19937_64 rng(derive_seed(config.seed, 1));
    std::discrete_distribution<std::size_t> sampler(weights.begin(), weights.end());

    TrainResult result{head, {}};
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    const std::size_t n = train_set.size();
    Matrix batch;
    batch.dim = dim;
    HeadGradient grad;
    std::vector<std::size_t> draws(n);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::size_t positives = 0;
        for (auto& d : draws) {
            d = sampler(rng);
            positives += kinds[d] == CohortKind::pre_cancer ? 1 : 0;
        }

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            batch.values.clear();
            batch.labels.clear();
            batch.masks.clear();
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t idx = draws[b];
                const auto row = std::span<const double>(train_m.values).subspan(idx * dim, dim);
                batch.values.insert(batch.values.end(), row.begin(), row.end());
                batch.labels.push_back(train_m.labels[idx]);
                batch.masks.push_back(train_m.masks[idx]);
            }
            const double loss = loss_and_gradient(head, batch.view(), grad, config.workers);
            if (!std::isfinite(loss))
                throw Divergence("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at draw " +
                                 std::to_string(start));
            loss_sum += loss * static_cast<double>(end - start);
            opt.step(head, grad);
            if (!head.is_finite())
                throw Divergence("non-finite parameters after update at epoch " + std::to_string(epoch));
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.val_loss = batch_loss(head, val_m.view());
        if (!std::isfinite(rec.val_loss))
            throw Divergence("non-finite validation loss at epoch " + std::to_string(epoch));
        rec.val_auroc = matrix_auroc(head, val_m);
        rec.positive_fraction = static_cast<double>(positives) / static_cast<double>(n);
        result.report.epochs.push_back(rec);

        if (rec.val_loss < best_val) {
            best_val = rec.val_loss;
            result.head = head;
            result.report.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best > 0 && since_best >= config.patience) {
            result.report.stop_reason = StopReason::patience;
            break;
        }
    }

    if (config.standardize_features) result.head = fold_standardization(result.head, st);
    return result;
}

double dataset_loss(const HazardHead& head, std::span<const Example> data) {
    if (data.empty()) throw ContractViolation("dataset_loss: empty dataset");
    check_examples(data, head.input_dim(), "dataset");
    const Matrix m = to_matrix(data, head.input_dim(), Standardizer::identity(head.input_dim()));
    return batch_loss(head, m.view());
}

PredictionTable predict_dataset(const HazardHead& head, std::span<const Example> data, unsigned workers) {
    for (const auto& e : data)
        if (e.x.size() != head.input_dim())
            throw ContractViolation("predict: study " + e.study_id + " has feature length " +
                                    std::to_string(e.x.size()) + ", head expects " +
                                    std::to_string(head.input_dim()));

    PredictionTable out(data.size());
    auto fill = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& e = data[i];
            auto& row = out[i];
            row.study_id = e.study_id;
            row.p = forward(head, e.x).probabilities;
            row.y = e.y;
            row.w = e.w;
            row.density = e.density;
            row.split = e.split;
            row.patient_id = e.patient_id;
            row.cohort_kind = e.cohort_kind;
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, data.size()))));
    if (workers == 1) {
        fill(0, data.size());
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            const std::size_t begin = data.size() * t / workers, end = data.size() * (t + 1) / workers;
            pool.emplace_back([&, t, begin, end] {
                try {
                    fill(begin, end);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace dbtrisk
