// pathonet: one binary for the whole pipeline. Subcommands cover synthetic
// data generation, label rendering, dataset preparation, training, inference,
// detection, evaluation, scoring, and threshold tuning.
//
// Exit codes: 0 success, 2 usage error (unknown flag, bad arguments),
// 3 malformed config, 4 missing input file, 1 any other failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pathonet/annotations.hpp"
#include "pathonet/checkpoint.hpp"
#include "pathonet/dataset.hpp"
#include "pathonet/density.hpp"
#include "pathonet/image.hpp"
#include "pathonet/metrics.hpp"
#include "pathonet/model.hpp"
#include "pathonet/postprocess.hpp"
#include "pathonet/runconfig.hpp"
#include "pathonet/synth.hpp"
#include "pathonet/trainer.hpp"
#include "pathonet/tuning.hpp"

namespace fs = std::filesystem;
using namespace pathonet;

namespace {

struct CliError {
    int code;
    std::string message;
};

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBadConfig = 3;
constexpr int kExitMissingFile = 4;

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw CliError{kExitMissingFile, "missing file: " + path};
}

void require_dir(const std::string& path) {
    if (!fs::is_directory(path)) throw CliError{kExitMissingFile, "missing directory: " + path};
}

// CLI options shared by most subcommands; flag values override config values
// only when the flag was actually given.
struct CommonOpts {
    std::string config_path;
    long seed = -1;
    int threads = -1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration file (key value lines)");
        cmd->add_option("--seed", seed, "seed for randomized steps");
        cmd->add_option("--threads", threads, "worker pool size (0 = logical cores)");
    }

    RunConfig resolve(const CLI::App* cmd) const {
        RunConfig rc;
        try {
            if (cmd->count("--config")) {
                require_file(config_path);
                std::ifstream in(config_path);
                parse_runconfig(in, rc, config_path);
            }
            apply_env_overrides(rc);
        } catch (const std::invalid_argument& e) {
            throw CliError{kExitBadConfig, e.what()};
        }
        if (cmd->count("--seed")) rc.seed = seed;
        if (cmd->count("--threads")) rc.threads = threads;
        return rc;
    }
};

void validated(RunConfig& rc) {
    try {
        rc.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitBadConfig, e.what()};
    }
}

long require_seed(const RunConfig& rc, const char* what) {
    if (rc.seed < 0)
        throw CliError{kExitUsage,
                       std::string(what) + ": an explicit --seed is required (or a 'seed' "
                                           "config entry)"};
    return rc.seed;
}

int worker_count(const RunConfig& rc, std::size_t jobs) {
    unsigned n = rc.threads > 0 ? static_cast<unsigned>(rc.threads)
                                : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<int>(std::min<std::size_t>(n, jobs));
}

std::vector<fs::path> sorted_files(const std::string& dir, const std::string& ext) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::array<float, 3> parse_threshold_triple(const std::string& s) {
    std::array<float, 3> t{};
    char extra;
    if (std::sscanf(s.c_str(), "%f,%f,%f%c", &t[0], &t[1], &t[2], &extra) != 3)
        throw CliError{kExitUsage, "detect: --thresholds wants three comma-separated values, "
                                   "got '" + s + "'"};
    return t;
}

// Tile pairs (<stem>.png, <stem>.txt) from a directory, sorted by stem.
struct TilePair {
    fs::path image;
    fs::path cells;
};

std::vector<TilePair> collect_tile_pairs(const std::string& dir) {
    std::vector<TilePair> out;
    for (const fs::path& png : sorted_files(dir, ".png")) {
        fs::path txt = png;
        txt.replace_extension(".txt");
        require_file(txt.string());
        out.push_back({png, txt});
    }
    if (out.empty()) throw CliError{kExitFailure, "no .png tiles found in " + dir};
    return out;
}

// ---- synth ----------------------------------------------------------------

int run_synth(const CLI::App* cmd, const CommonOpts& common, const std::string& out_dir,
              int count, double overlap, double noise, const std::string& prefix) {
    RunConfig rc = common.resolve(cmd);
    validated(rc);
    const long seed = require_seed(rc, "synth");
    if (count < 1) throw CliError{kExitUsage, "synth: --count must be >= 1"};

    SynthConfig sc;
    sc.tile = rc.tile;
    if (cmd->count("--overlap")) sc.overlap_probability = overlap;
    if (cmd->count("--noise")) sc.noise_amplitude = static_cast<float>(noise);
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        sc.seed = static_cast<unsigned>(seed) + static_cast<unsigned>(i);
        sc.validate();
        const SynthTile tile = generate_tile(sc);
        char name[64];
        std::snprintf(name, sizeof(name), "%s%04d", prefix.c_str(), i);
        write_png((fs::path(out_dir) / (std::string(name) + ".png")).string(), tile.image);
        write_annotations((fs::path(out_dir) / (std::string(name) + ".txt")).string(),
                          tile.annotations);
    }
    return 0;
}

// ---- render-labels --------------------------------------------------------

int run_render_labels(const CLI::App* cmd, const CommonOpts& common, const std::string& cells,
                      const std::string& image, int width, int height,
                      const std::string& out) {
    RunConfig rc = common.resolve(cmd);
    validated(rc);
    require_file(cells);
    int w = width, h = height;
    if (cmd->count("--image")) {
        require_file(image);
        const ImageU8 img = read_png(image);
        w = img.width;
        h = img.height;
    }
    if (w < 1 || h < 1)
        throw CliError{kExitUsage,
                       "render-labels: give --image or both --width and --height"};
    const auto anns = read_annotations(cells);
    save_dmap(out, render_density_map(anns, h, w, rc.label_config()));
    return 0;
}

// ---- prepare --------------------------------------------------------------

int run_prepare(const CLI::App* cmd, const CommonOpts& common, const std::string& images_dir,
                const std::string& out_dir) {
    RunConfig rc = common.resolve(cmd);
    validated(rc);
    const long seed = require_seed(rc, "prepare");
    require_dir(images_dir);

    const std::vector<TilePair> sources = collect_tile_pairs(images_dir);
    const std::vector<Split> split =
        assign_split(sources.size(), rc.train_fraction, static_cast<std::uint64_t>(seed));
    fs::create_directories(fs::path(out_dir) / "train");
    fs::create_directories(fs::path(out_dir) / "val");

    for (std::size_t i = 0; i < sources.size(); ++i) {
        const ImageU8 img = read_png(sources[i].image.string());
        const auto anns = read_annotations(sources[i].cells.string());
        const std::vector<Tile> tiles = tile_image(img, anns, rc.tile);
        const fs::path dest =
            fs::path(out_dir) / (split[i] == Split::train ? "train" : "val");
        const std::string stem = sources[i].image.stem().string();
        for (const Tile& t : tiles) {
            char suffix[48];
            std::snprintf(suffix, sizeof(suffix), "_%d_%d", t.ty, t.tx);
            write_png((dest / (stem + suffix + ".png")).string(), t.image);
            write_annotations((dest / (stem + suffix + ".txt")).string(), t.annotations);
        }
    }
    return 0;
}

// ---- train ----------------------------------------------------------------

int run_train(const CLI::App* cmd, const CommonOpts& common, const std::string& data_dir,
              const std::string& out_path, int epochs, int batch_size, double lr, int width,
              long max_steps, bool no_augment) {
    RunConfig rc = common.resolve(cmd);
    if (cmd->count("--epochs")) rc.epochs = epochs;
    if (cmd->count("--batch-size")) rc.batch_size = batch_size;
    if (cmd->count("--lr")) rc.base_lr = lr;
    if (cmd->count("--width")) rc.base_width = width;
    if (cmd->count("--max-steps")) rc.max_steps = max_steps;
    if (no_augment) rc.augment = false;
    validated(rc);
    const long seed = require_seed(rc, "train");
    require_dir(data_dir);

    const LabelRenderConfig lc = rc.label_config();
    std::vector<TrainSample> data;
    for (const TilePair& p : collect_tile_pairs(data_dir)) {
        const ImageU8 img = read_png(p.image.string());
        TrainSample s;
        s.image = image_to_tensor(img);
        s.label = render_density_map(read_annotations(p.cells.string()), img.height,
                                     img.width, lc);
        data.push_back(std::move(s));
    }

    ModelParams model =
        build_pathonet<float>(rc.base_width, static_cast<std::uint64_t>(seed));
    TrainConfig tc;
    tc.epochs = rc.epochs;
    tc.batch_size = rc.batch_size;
    tc.schedule = rc.lr_schedule();
    tc.seed = static_cast<std::uint64_t>(seed);
    tc.augment = rc.augment;
    tc.max_steps = rc.max_steps;
    train(model, data, tc, &std::cout);
    save_checkpoint(model, out_path);
    return 0;
}

// ---- infer ----------------------------------------------------------------

Tensor infer_one(const ModelParams& model, const std::string& image_path) {
    const ImageU8 img = read_png(image_path);
    return forward(model, image_to_tensor(img));
}

int run_infer(const CLI::App* cmd, const CommonOpts& common, const std::string& model_path,
              const std::string& image, const std::string& images_dir,
              const std::string& out) {
    RunConfig rc = common.resolve(cmd);
    validated(rc);
    require_file(model_path);
    const ModelParams model = load_checkpoint(model_path);

    if (cmd->count("--image")) {
        require_file(image);
        save_dmap(out, infer_one(model, image));
        return 0;
    }
    if (!cmd->count("--images"))
        throw CliError{kExitUsage, "infer: give --image or --images"};
    require_dir(images_dir);
    const std::vector<fs::path> pngs = sorted_files(images_dir, ".png");
    if (pngs.empty()) throw CliError{kExitFailure, "no .png images found in " + images_dir};
    fs::create_directories(out);

    // Independent jobs, one output file each; order never matters for bytes.
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(pngs.size());
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < pngs.size(); i = next.fetch_add(1)) {
            try {
                fs::path dst = fs::path(out) / pngs[i].filename();
                dst.replace_extension(".dmap");
                save_dmap(dst.string(), infer_one(model, pngs[i].string()));
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = worker_count(rc, pngs.size()); t > 1; --t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (const std::string& e : errors)
        if (!e.empty()) throw CliError{kExitFailure, e};
    return 0;
}

// ---- detect ---------------------------------------------------------------

int run_detect(const CLI::App* cmd, const CommonOpts& common, const std::string& model_path,
               const std::string& image, const std::string& thresholds, double min_sep,
               const std::string& seed_source, const std::string& out) {
    RunConfig rc = common.resolve(cmd);
    if (cmd->count("--thresholds")) {
        const auto t = parse_threshold_triple(thresholds);
        rc.threshold_immunopositive = t[0];
        rc.threshold_immunonegative = t[1];
        rc.threshold_lymphocyte = t[2];
    }
    if (cmd->count("--min-separation")) rc.min_separation = static_cast<float>(min_sep);
    if (cmd->count("--seed-source")) rc.seed_source = seed_source;
    validated(rc);
    require_file(model_path);
    require_file(image);

    const ModelParams model = load_checkpoint(model_path);
    const Tensor density = infer_one(model, image);
    const std::vector<CellAnnotation> cells = extract_cells(density, rc.postprocess_config());
    write_annotations(out, cells);
    return 0;
}

// ---- eval -----------------------------------------------------------------

int run_eval(const CLI::App* cmd, const CommonOpts& common, const std::string& gt_path,
             const std::string& pred_path, double radius) {
    RunConfig rc = common.resolve(cmd);
    if (cmd->count("--radius")) rc.match_radius = radius;
    validated(rc);
    require_file(gt_path);
    require_file(pred_path);

    const auto gt = read_annotations(gt_path);
    const auto pred = read_annotations(pred_path);
    const MatchReport match = match_detections(gt, pred, rc.match_config());
    const PrfReport prf = compute_prf(match);
    for (int c = 0; c < 3; ++c) {
        const ClassMatch& m = match.per_class[static_cast<std::size_t>(c)];
        const Prf& p = prf.per_class[static_cast<std::size_t>(c)];
        std::printf("%s tp %d fp %d fn %d precision %g recall %g f1 %g\n",
                    to_string(static_cast<CellClass>(c)), m.tp, m.fp, m.fn, p.precision,
                    p.recall, p.f1);
    }
    std::printf("micro precision %g recall %g f1 %g\n", prf.micro.precision, prf.micro.recall,
                prf.micro.f1);
    return 0;
}

// ---- score ----------------------------------------------------------------

int run_score(const CLI::App* cmd, const CommonOpts& common, const std::string& cells_path,
              const std::string& counts_arg) {
    RunConfig rc = common.resolve(cmd);
    validated(rc);

    CellCounts counts;
    if (cmd->count("--counts")) {
        long p, n, l;
        char extra;
        if (std::sscanf(counts_arg.c_str(), "%ld,%ld,%ld%c", &p, &n, &l, &extra) != 3)
            throw CliError{kExitUsage,
                           "score: --counts wants immunopositive,immunonegative,lymphocyte"};
        counts.immunopositive = p;
        counts.immunonegative = n;
        counts.lymphocyte = l;
    } else if (cmd->count("--cells")) {
        require_file(cells_path);
        counts = count_cells(read_annotations(cells_path));
    } else {
        throw CliError{kExitUsage, "score: give --cells or --counts"};
    }

    const ScoreReport report = score_counts(counts);
    std::printf("ki67 %.4f band %s%s\n", report.ki67.value, to_string(report.ki67_band),
                report.ki67.degenerate ? " (no stained cells)" : "");
    std::printf("til %.4f band %s%s\n", report.til.value, to_string(report.til_band),
                report.til.degenerate ? " (no cells)" : "");
    return 0;
}

// ---- tune-thresholds ------------------------------------------------------

int run_tune(const CLI::App* cmd, const CommonOpts& common, const std::string& pred_dir,
             const std::string& truth_dir, double radius, const std::string& out) {
    RunConfig rc = common.resolve(cmd);
    if (cmd->count("--radius")) rc.match_radius = radius;
    validated(rc);
    require_dir(pred_dir);
    require_dir(truth_dir);

    std::vector<Tensor> maps;
    std::vector<std::vector<CellAnnotation>> truth;
    for (const fs::path& dmap : sorted_files(pred_dir, ".dmap")) {
        fs::path txt = fs::path(truth_dir) / dmap.filename();
        txt.replace_extension(".txt");
        require_file(txt.string());
        maps.push_back(load_dmap(dmap.string()));
        truth.push_back(read_annotations(txt.string()));
    }
    if (maps.empty()) throw CliError{kExitFailure, "no .dmap files found in " + pred_dir};

    PostprocessConfig base = rc.postprocess_config();
    const TuneResult result = tune_thresholds(maps, truth, rc.match_config(), base);
    const char* keys[3] = {"threshold_immunopositive", "threshold_immunonegative",
                           "threshold_lymphocyte"};
    for (int c = 0; c < 3; ++c)
        std::printf("%s %g f1 %g\n", keys[c], result.thresholds[static_cast<std::size_t>(c)],
                    result.f1[static_cast<std::size_t>(c)]);
    if (cmd->count("--out")) {
        std::ofstream os(out, std::ios::trunc);
        if (!os) throw CliError{kExitFailure, "cannot write " + out};
        for (int c = 0; c < 3; ++c)
            os << keys[c] << " " << result.thresholds[static_cast<std::size_t>(c)] << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PathoNet pipeline: synthesis, training, detection, and scoring"};
    app.require_subcommand(1);

    CommonOpts common;

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic tiles with ground truth");
    std::string synth_out = "synth";
    int synth_count = 1;
    double synth_overlap = 0.0, synth_noise = 8.0;
    std::string synth_prefix = "tile_";
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--count", synth_count, "number of tiles");
    synth->add_option("--overlap", synth_overlap, "probability a cell may overlap others");
    synth->add_option("--noise", synth_noise, "background noise amplitude");
    synth->add_option("--prefix", synth_prefix, "output basename prefix");
    common.attach(synth);

    // render-labels
    auto* render = app.add_subcommand("render-labels", "render annotations to a density map");
    std::string render_cells, render_image, render_out;
    int render_w = 0, render_h = 0;
    render->add_option("--cells", render_cells, "annotation file")->required();
    render->add_option("--image", render_image, "take dimensions from this image");
    render->add_option("--width", render_w, "map width");
    render->add_option("--height", render_h, "map height");
    render->add_option("--out", render_out, "output .dmap path")->required();
    common.attach(render);

    // prepare
    auto* prepare = app.add_subcommand("prepare", "tile images and split into train/val");
    std::string prep_images, prep_out;
    prepare->add_option("--images", prep_images, "directory of <stem>.png + <stem>.txt")
        ->required();
    prepare->add_option("--out", prep_out, "output directory")->required();
    common.attach(prepare);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model on prepared tiles");
    std::string train_data, train_out;
    int train_epochs = 0, train_batch = 0, train_width = 0;
    double train_lr = 0.0;
    long train_max_steps = 0;
    bool train_no_augment = false;
    train_cmd->add_option("--data", train_data, "directory of training tiles")->required();
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_batch, "examples per step");
    train_cmd->add_option("--lr", train_lr, "base learning rate");
    train_cmd->add_option("--width", train_width, "base channel width");
    train_cmd->add_option("--max-steps", train_max_steps, "stop after this many steps");
    train_cmd->add_flag("--no-augment", train_no_augment, "disable dihedral augmentation");
    common.attach(train_cmd);

    // infer
    auto* infer = app.add_subcommand("infer", "run the network, write density maps");
    std::string infer_model, infer_image, infer_images, infer_out;
    infer->add_option("--model", infer_model, "checkpoint path")->required();
    infer->add_option("--image", infer_image, "single input image");
    infer->add_option("--images", infer_images, "directory of input images");
    infer->add_option("--out", infer_out, "output .dmap path or directory")->required();
    common.attach(infer);

    // detect
    auto* detect = app.add_subcommand("detect", "detect cell centers in an image");
    std::string det_model, det_image, det_thresholds, det_seed_source, det_out;
    double det_min_sep = 0.0;
    detect->add_option("--model", det_model, "checkpoint path")->required();
    detect->add_option("--image", det_image, "input image")->required();
    detect->add_option("--thresholds", det_thresholds,
                       "per-class binarization thresholds, e.g. 120,180,40");
    detect->add_option("--min-separation", det_min_sep, "minimum seed separation");
    detect->add_option("--seed-source", det_seed_source,
                       "distance_transform or density_map");
    detect->add_option("--out", det_out, "output annotation file")->required();
    common.attach(detect);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "match detections against ground truth");
    std::string eval_gt, eval_pred;
    double eval_radius = 0.0;
    eval_cmd->add_option("--gt", eval_gt, "ground-truth annotation file")->required();
    eval_cmd->add_option("--pred", eval_pred, "predicted annotation file")->required();
    eval_cmd->add_option("--radius", eval_radius, "match radius in pixels");
    common.attach(eval_cmd);

    // score
    auto* score = app.add_subcommand("score", "Ki-67 and TIL scores from cell counts");
    std::string score_cells, score_counts;
    score->add_option("--cells", score_cells, "annotation file to count");
    score->add_option("--counts", score_counts,
                      "direct counts immunopositive,immunonegative,lymphocyte");
    common.attach(score);

    // tune-thresholds
    auto* tune = app.add_subcommand("tune-thresholds",
                                    "sweep per-class thresholds on validation data");
    std::string tune_pred, tune_truth, tune_out;
    double tune_radius = 0.0;
    tune->add_option("--pred", tune_pred, "directory of predicted .dmap files")->required();
    tune->add_option("--truth", tune_truth, "directory of matching .txt annotations")
        ->required();
    tune->add_option("--radius", tune_radius, "match radius in pixels");
    tune->add_option("--out", tune_out, "write tuned thresholds as a config fragment");
    common.attach(tune);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed())
            return run_synth(synth, common, synth_out, synth_count, synth_overlap,
                             synth_noise, synth_prefix);
        if (render->parsed())
            return run_render_labels(render, common, render_cells, render_image, render_w,
                                     render_h, render_out);
        if (prepare->parsed()) return run_prepare(prepare, common, prep_images, prep_out);
        if (train_cmd->parsed())
            return run_train(train_cmd, common, train_data, train_out, train_epochs,
                             train_batch, train_lr, train_width, train_max_steps,
                             train_no_augment);
        if (infer->parsed())
            return run_infer(infer, common, infer_model, infer_image, infer_images,
                             infer_out);
        if (detect->parsed())
            return run_detect(detect, common, det_model, det_image, det_thresholds,
                              det_min_sep, det_seed_source, det_out);
        if (eval_cmd->parsed())
            return run_eval(eval_cmd, common, eval_gt, eval_pred, eval_radius);
        if (score->parsed()) return run_score(score, common, score_cells, score_counts);
        if (tune->parsed())
            return run_tune(tune, common, tune_pred, tune_truth, tune_radius, tune_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    std::cerr << "error: no subcommand handled\n";
    return kExitUsage;
}
