#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "data.hpp"
#include "training.hpp"

namespace wslln {

// Full application config: synth + train + eval sections plus output paths.
// Precedence: command-line flag > config file > built-in default.
struct AppConfig {
    SynthConfig synth;
    TrainConfig train;
    EvalOptions eval;
    std::string out = "runs/out";
    std::string data;  // corpus directory; defaults to <out>/corpus
};

namespace detail {

template <typename T>
void maybe(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace detail

inline AppConfig load_config(const std::optional<std::string>& path) {
    AppConfig cfg;
    if (!path) return cfg;
    std::string text = detail::read_file(*path);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        size_t line = 1;
        for (size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw std::runtime_error(*path + ": parse error at line " + std::to_string(line) + ": " +
                                 e.what());
    }
    if (root.contains("synth")) {
        const json& s = root["synth"];
        detail::maybe(s, "num_train", cfg.synth.num_train);
        detail::maybe(s, "num_test", cfg.synth.num_test);
        detail::maybe(s, "T", cfg.synth.T);
        detail::maybe(s, "Dv", cfg.synth.Dv);
        detail::maybe(s, "Dq", cfg.synth.Dq);
        detail::maybe(s, "k", cfg.synth.k);
        detail::maybe(s, "beta", cfg.synth.beta);
        detail::maybe(s, "sigma", cfg.synth.sigma);
        detail::maybe(s, "distractors", cfg.synth.distractors);
        detail::maybe(s, "seed", cfg.synth.seed);
    }
    if (root.contains("train")) {
        const json& t = root["train"];
        detail::maybe(t, "lambda", cfg.train.lambda);
        detail::maybe(t, "lr", cfg.train.lr);
        detail::maybe(t, "momentum", cfg.train.momentum);
        detail::maybe(t, "epochs", cfg.train.epochs);
        detail::maybe(t, "seed", cfg.train.seed);
        detail::maybe(t, "negative_ratio", cfg.train.negative_ratio);
        detail::maybe(t, "d", cfg.train.d);
        detail::maybe(t, "h", cfg.train.h);
        detail::maybe(t, "k", cfg.train.k);
        detail::maybe(t, "grad_clip", cfg.train.grad_clip);
        detail::maybe(t, "eval_each_epoch", cfg.train.eval_each_epoch);
        if (t.contains("mode")) cfg.train.mode = parse_mode(t.at("mode").get<std::string>());
    }
    if (root.contains("eval")) {
        const json& e = root["eval"];
        detail::maybe(e, "ks", cfg.eval.ks);
        detail::maybe(e, "ths", cfg.eval.ths);
    }
    if (root.contains("paths")) {
        const json& p = root["paths"];
        detail::maybe(p, "out", cfg.out);
        detail::maybe(p, "data", cfg.data);
    }
    return cfg;
}

}  // namespace wslln
