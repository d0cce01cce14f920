// Command-line front end: corpus synthesis, training, evaluation, ablations,
// and single-pair prediction over the proposal scorer library.

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "wslln/checkpoint.hpp"
#include "wslln/config.hpp"
#include "wslln/training.hpp"

using namespace wslln;

namespace {

struct CliFlags {
    std::optional<std::string> config;
    std::optional<uint64_t> seed;
    std::optional<double> lambda;
    std::optional<std::string> mode;
    std::optional<std::string> out;
    std::optional<std::string> data;
};

void add_common(CLI::App* cmd, CliFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--seed", f.seed, "overrides synth and train seeds");
    cmd->add_option("--lambda", f.lambda, "refinement loss weight");
    cmd->add_option("--mode", f.mode, "full | align-only | detect-only");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--data", f.data, "corpus directory (default: <out>/corpus)");
}

// flag > file > default
AppConfig resolve(const CliFlags& f) {
    AppConfig cfg = load_config(f.config);
    if (f.seed) { cfg.synth.seed = *f.seed; cfg.train.seed = *f.seed; }
    if (f.lambda) cfg.train.lambda = *f.lambda;
    if (f.mode) cfg.train.mode = parse_mode(*f.mode);
    if (f.out) cfg.out = *f.out;
    if (f.data) cfg.data = *f.data;
    if (cfg.data.empty()) cfg.data = cfg.out + "/corpus";
    return cfg;
}

int cmd_synth(const CliFlags& f) {
    AppConfig cfg = resolve(f);
    SynthResult res = gen_synthetic(cfg.synth, cfg.data);
    std::printf("wrote %zu train / %zu test videos to %s\n", cfg.synth.num_train,
                cfg.synth.num_test, cfg.data.c_str());
    std::printf("T=%zu Dv=%zu Dq=%zu k=%d proposals=%zu beta=%g sigma=%g distractors=%d seed=%llu\n",
                cfg.synth.T, cfg.synth.Dv, cfg.synth.Dq, cfg.synth.k, res.num_spans,
                cfg.synth.beta, cfg.synth.sigma, cfg.synth.distractors,
                (unsigned long long)cfg.synth.seed);
    return 0;
}

int cmd_train(const CliFlags& f) {
    AppConfig cfg = resolve(f);
    Manifest train_man = load_manifest(fs::path(cfg.data) / "train" / "manifest.json");
    Dataset train_data = load_dataset(train_man);

    Dataset eval_data;
    bool have_eval = fs::exists(fs::path(cfg.data) / "test" / "manifest.json");
    if (have_eval)
        eval_data = load_dataset(load_manifest(fs::path(cfg.data) / "test" / "manifest.json"));

    TrainResult res = train(train_data, cfg.train, have_eval ? &eval_data : nullptr);

    fs::create_directories(cfg.out);
    fs::path ckpt = fs::path(cfg.out) / "checkpoint.wscp";
    save_checkpoint(res.params, cfg.train.k, ckpt);
    write_train_log(res.log, fs::path(cfg.out) / "train_log.jsonl");

    const EpochLog& last = res.log.back();
    std::printf("mode=%s lambda=%g epochs=%zu: mean_Lv %.4f -> %.4f, mean_Lr %.4f -> %.4f\n",
                mode_name(cfg.train.mode), cfg.train.lambda, cfg.train.epochs,
                res.log.front().mean_lv, last.mean_lv, res.log.front().mean_lr, last.mean_lr);
    std::printf("checkpoint: %s\n", ckpt.string().c_str());

    if (have_eval) {
        auto [rep, results] = evaluate_model(res.params, eval_data, cfg.train.k, cfg.train.mode,
                                             cfg.eval);
        std::fputs(report_table(rep, cfg.eval.ks, cfg.eval.ths).c_str(), stdout);
    }
    return 0;
}

int cmd_eval(const CliFlags& f, const std::string& ckpt_flag) {
    AppConfig cfg = resolve(f);
    fs::path ckpt_path =
        ckpt_flag.empty() ? fs::path(cfg.out) / "checkpoint.wscp" : fs::path(ckpt_flag);
    Checkpoint ck = load_checkpoint(ckpt_path);
    Dataset test_data = load_dataset(load_manifest(fs::path(cfg.data) / "test" / "manifest.json"));
    Mode mode = f.mode ? parse_mode(*f.mode) : cfg.train.mode;
    auto [rep, results] = evaluate_model(ck.params, test_data, ck.k, mode, cfg.eval);
    fs::create_directories(cfg.out);
    fs::path report_path = fs::path(cfg.out) / "report.json";
    detail::write_file(report_path, report_json(rep).dump(2) + "\n");
    std::fputs(report_table(rep, cfg.eval.ks, cfg.eval.ths).c_str(), stdout);
    std::printf("report: %s\n", report_path.string().c_str());
    return 0;
}

int cmd_predict(const CliFlags& f, const std::string& ckpt_flag, const std::string& video_id,
                const std::string& query_id, size_t topk) {
    AppConfig cfg = resolve(f);
    fs::path ckpt_path =
        ckpt_flag.empty() ? fs::path(cfg.out) / "checkpoint.wscp" : fs::path(ckpt_flag);
    Checkpoint ck = load_checkpoint(ckpt_path);
    // look in test first, then train
    for (const char* split : {"test", "train"}) {
        fs::path man_path = fs::path(cfg.data) / split / "manifest.json";
        if (!fs::exists(man_path)) continue;
        Manifest man = load_manifest(man_path);
        for (const VideoRecord& v : man.records) {
            if (!video_id.empty() && v.video_id != video_id) continue;
            for (const QueryRecord& q : v.queries) {
                if (!query_id.empty() && q.query_id != query_id) continue;
                Matrix fv = load_features(v.features_resolved);
                Mode mode = f.mode ? parse_mode(*f.mode) : Mode::full;
                auto ranked = predict_ranked(ck.params, fv, q.vector, ck.k, mode);
                std::printf("video %s, query %s:\n", v.video_id.c_str(), q.query_id.c_str());
                for (size_t i = 0; i < std::min(topk, ranked.size()); ++i) {
                    FrameRange fr = span_frames(ranked[i].first, fv.rows, ck.k);
                    std::printf("  #%zu span [%d,%d) frames [%zu,%zu) score %.6f\n", i + 1,
                                ranked[i].first.start, ranked[i].first.end, fr.first, fr.last,
                                ranked[i].second);
                }
                return 0;
            }
        }
    }
    std::fprintf(stderr, "error: no matching (video, query) found\n");
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weakly supervised temporal localization over proposal sets"};
    app.require_subcommand(1);

    CliFlags f;
    std::string ckpt_flag, video_id, query_id;
    size_t topk = 5;

    CLI::App* synth = app.add_subcommand("synth", "generate a planted-event corpus");
    add_common(synth, f);

    CLI::App* trainc = app.add_subcommand("train", "train on a corpus");
    add_common(trainc, f);

    CLI::App* ablate = app.add_subcommand("ablate", "train a model variant (set --mode)");
    add_common(ablate, f);

    CLI::App* evalc = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_common(evalc, f);
    evalc->add_option("--ckpt", ckpt_flag, "checkpoint path (default: <out>/checkpoint.wscp)");

    CLI::App* predict = app.add_subcommand("predict", "rank proposals for one (video, query)");
    add_common(predict, f);
    predict->add_option("--ckpt", ckpt_flag, "checkpoint path");
    predict->add_option("--video", video_id, "video id (default: first)");
    predict->add_option("--query", query_id, "query id (default: first)");
    predict->add_option("--topk", topk, "spans to print");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(f);
        if (trainc->parsed() || ablate->parsed()) return cmd_train(f);
        if (evalc->parsed()) return cmd_eval(f, ckpt_flag);
        if (predict->parsed()) return cmd_predict(f, ckpt_flag, video_id, query_id, topk);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
