#include "squareval/model.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "squareval/rng.hpp"

namespace squareval {

namespace {

struct Activations {
    std::array<double, kHidden1> h1{};
    std::array<double, kHidden2> h2{};
    double out = 0.0;
};

Activations run(const ModelParams& p, std::span<const double> x) {
    Activations a;
    for (std::size_t i = 0; i < kHidden1; ++i) a.h1[i] = p.b1.values[i];
    for (std::size_t j = 0; j < kInputSize; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        for (std::size_t i = 0; i < kHidden1; ++i) a.h1[i] += p.W1(i, j) * xj;
    }
    for (auto& v : a.h1) v = std::tanh(v);

    for (std::size_t i = 0; i < kHidden2; ++i) {
        double s = p.b2.values[i];
        for (std::size_t j = 0; j < kHidden1; ++j) s += p.W2(i, j) * a.h1[j];
        a.h2[i] = std::tanh(s);
    }

    double s = p.b3.values[0];
    for (std::size_t j = 0; j < kHidden2; ++j) s += p.W3(0, j) * a.h2[j];
    a.out = s;
    return a;
}

bool finite(const ModelParams& p) {
    for (const Tensor* t : p.tensors()) {
        for (double v : t->values) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

}  // namespace

std::size_t ModelParams::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += t->size();
    return n;
}

bool ModelParams::all_finite() const noexcept { return finite(*this); }

ModelParams init_params(std::uint64_t seed) {
    SplitMix64 rng(seed);
    ModelParams p;
    for (Tensor* w : {&p.W1, &p.W2, &p.W3}) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w->rows + w->cols));
        for (double& v : w->values) v = rng.uniform(-limit, limit);
    }
    return p;
}

double forward(const ModelParams& p, std::span<const double> x) {
    if (x.size() != kInputSize) {
        throw std::invalid_argument(fmt::format("input has {} entries, expected {}", x.size(), kInputSize));
    }
    return run(p, x).out;
}

double output_bound(const ModelParams& p) noexcept {
    double s = std::abs(p.b3.values[0]);
    for (double w : p.W3.values) s += std::abs(w);
    return s;
}

double mean_squared_error(const ModelParams& p, std::span<const EncodedExample> batch) {
    if (batch.empty()) throw UsageError("mean squared error of an empty set");
    double sum = 0.0;
    for (const auto& e : batch) {
        const double r = run(p, e.x).out - e.y;
        sum += r * r;
    }
    return sum / static_cast<double>(batch.size());
}

LossAndGradients loss_and_gradients(const ModelParams& p, std::span<const EncodedExample> batch) {
    if (batch.empty()) throw UsageError("cannot compute gradients of an empty batch");
    LossAndGradients out;
    ModelParams& g = out.gradients;
    const double scale = 2.0 / static_cast<double>(batch.size());
    double sum = 0.0;

    std::array<double, kHidden2> d2{};
    std::array<double, kHidden1> d1{};
    for (const auto& e : batch) {
        const Activations a = run(p, e.x);
        const double r = a.out - e.y;
        sum += r * r;
        const double d = scale * r;

        g.b3.values[0] += d;
        for (std::size_t j = 0; j < kHidden2; ++j) {
            g.W3(0, j) += d * a.h2[j];
            d2[j] = d * p.W3(0, j) * (1.0 - a.h2[j] * a.h2[j]);
        }

        d1.fill(0.0);
        for (std::size_t i = 0; i < kHidden2; ++i) {
            g.b2.values[i] += d2[i];
            for (std::size_t j = 0; j < kHidden1; ++j) {
                g.W2(i, j) += d2[i] * a.h1[j];
                d1[j] += p.W2(i, j) * d2[i];
            }
        }
        for (std::size_t i = 0; i < kHidden1; ++i) {
            d1[i] *= 1.0 - a.h1[i] * a.h1[i];
            g.b1.values[i] += d1[i];
        }
        for (std::size_t j = 0; j < kInputSize; ++j) {
            const double xj = e.x[j];
            if (xj == 0.0) continue;
            for (std::size_t i = 0; i < kHidden1; ++i) g.W1(i, j) += d1[i] * xj;
        }
    }
    out.mse = sum / static_cast<double>(batch.size());
    return out;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw UsageError("learning rate must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw UsageError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw UsageError("Adam epsilon must be positive");
    if (batch_size < 1) throw UsageError("batch size must be at least 1");
    if (epochs < 0) throw UsageError("epochs must not be negative");
}

void adam_update(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& cfg) {
    if (!finite(grads)) throw NumericError("non-finite gradient");
    ++state.t;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    const auto ps = params.tensors();
    const auto gs = grads.tensors();
    const auto ms = state.m.tensors();
    const auto vs = state.v.tensors();
    for (std::size_t k = 0; k < ps.size(); ++k) {
        auto& theta = ps[k]->values;
        const auto& g = gs[k]->values;
        auto& m = ms[k]->values;
        auto& v = vs[k]->values;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

std::pair<ModelParams, AdamState> adam_step(const ModelParams& params, const ModelParams& grads,
                                             const AdamState& state, const TrainConfig& cfg) {
    std::pair<ModelParams, AdamState> out{params, state};
    adam_update(out.first, grads, out.second, cfg);
    return out;
}

TrainResult train(std::span<const EncodedExample> train_set, std::span<const EncodedExample> validation_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw UsageError("training set is empty");

    TrainResult result{init_params(cfg.seed), {}};
    AdamState adam;
    SplitMix64 order_rng(~cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<EncodedExample> batch;
    batch.reserve(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle) shuffle(std::span(order), order_rng);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            batch.clear();
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
            const auto lg = loss_and_gradients(result.params, batch);
            try {
                if (!std::isfinite(lg.mse)) throw NumericError("non-finite loss");
                adam_update(result.params, lg.gradients, adam, cfg);
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("epoch {}, batch {}: {}", epoch, batch_index, e.what()));
            }
        }

        EpochStats stats{epoch, mean_squared_error(result.params, train_set), std::nullopt};
        if (!validation_set.empty()) stats.val_mse = mean_squared_error(result.params, validation_set);
        if (!std::isfinite(stats.train_mse) || (stats.val_mse && !std::isfinite(*stats.val_mse))) {
            throw NumericError(fmt::format("epoch {}: loss is no longer finite", epoch));
        }
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

// ---- weights file -------------------------------------------------------------

ModelMetadata metadata_for(const TrainConfig& cfg) {
    return {
        {"seed", std::to_string(cfg.seed)},
        {"learning_rate", fmt::format("{:.17g}", cfg.learning_rate)},
        {"beta1", fmt::format("{:.17g}", cfg.beta1)},
        {"beta2", fmt::format("{:.17g}", cfg.beta2)},
        {"epsilon", fmt::format("{:.17g}", cfg.epsilon)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"epochs", std::to_string(cfg.epochs)},
        {"shuffle", cfg.shuffle ? "1" : "0"},
    };
}

void save_params(const std::filesystem::path& path, const ModelParams& params, const ModelMetadata& metadata) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelFileError("cannot write " + path.string());
    std::string text;
    text += kModelHeader;
    text += '\n';
    for (const auto& [key, value] : metadata) {
        if (key.empty() || key.find_first_of(" \n") != std::string::npos || key == "layer") {
            throw UsageError("invalid model metadata key '" + key + "'");
        }
        text += key + ' ' + value + '\n';
    }
    const auto tensors = params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const Tensor& t = *tensors[k];
        text += fmt::format("layer {} {} {}\n", ModelParams::kNames[k], t.rows, t.cols);
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) {
                if (c) text += ' ';
                text += fmt::format("{:.17g}", t(r, c));
            }
            text += '\n';
        }
    }
    out << text;
    if (!out.flush()) throw ModelFileError("cannot write " + path.string());
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_value(std::string_view text, T& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

}  // namespace

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelFileError("cannot open " + path.string());
    const std::string where = path.string();

    std::size_t line_no = 0;
    std::string line;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    auto fail = [&](const std::string& what) {
        return ModelFileError(fmt::format("{}:{}: {}", where, line_no, what));
    };

    if (!next_line()) throw ModelFileError(where + " is empty");
    if (line != kModelHeader) {
        if (line.starts_with("squareval-model ")) {
            throw fail(fmt::format("unsupported version '{}' (expected '{}')", line, kModelHeader));
        }
        throw fail(fmt::format("missing '{}' header", kModelHeader));
    }

    ModelFile file;
    auto tensors = file.params.tensors();
    std::size_t next_layer = 0;
    bool have_line = next_line();
    while (have_line && !line.starts_with("layer ")) {
        if (!line.empty()) {
            const auto space = line.find(' ');
            file.metadata.emplace_back(line.substr(0, space),
                                       space == std::string::npos ? std::string() : line.substr(space + 1));
        }
        have_line = next_line();
    }

    while (next_layer < tensors.size()) {
        const std::string_view name = ModelParams::kNames[next_layer];
        if (!have_line) throw fail(fmt::format("truncated: layer {} missing", name));
        const auto fields = split_spaces(line);
        std::size_t rows = 0;
        std::size_t cols = 0;
        if (fields.size() != 4 || fields[0] != "layer" || !parse_value(fields[2], rows) ||
            !parse_value(fields[3], cols)) {
            throw fail("expected 'layer <name> <rows> <cols>'");
        }
        if (fields[1] != name) throw fail(fmt::format("expected layer {}, found {}", name, fields[1]));
        Tensor& t = *tensors[next_layer];
        if (rows != t.rows || cols != t.cols) {
            throw fail(fmt::format("layer {} has shape {}x{}, expected {}x{}", name, rows, cols, t.rows, t.cols));
        }
        for (std::size_t r = 0; r < rows; ++r) {
            if (!next_line()) throw fail(fmt::format("truncated: layer {} ends after {} of {} rows", name, r, rows));
            const auto values = split_spaces(line);
            if (values.size() != cols) {
                throw fail(fmt::format("layer {} row {} has {} values, expected {}", name, r, values.size(), cols));
            }
            for (std::size_t c = 0; c < cols; ++c) {
                double v = 0.0;
                if (!parse_value(values[c], v) || !std::isfinite(v)) {
                    throw fail(fmt::format("layer {}: bad value '{}'", name, values[c]));
                }
                t(r, c) = v;
            }
        }
        ++next_layer;
        have_line = next_line();
    }
    while (have_line) {
        if (!line.empty()) throw fail("unexpected content after the last layer");
        have_line = next_line();
    }
    return file;
}

}  // namespace squareval
