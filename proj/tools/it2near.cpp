// it2near command-line tool: index, query, eval, mf-plot, gen-synthetic, serve.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "it2near/evaluation.hpp"
#include "it2near/image_io.hpp"
#include "it2near/index_io.hpp"
#include "it2near/membership.hpp"
#include "it2near/retrieval.hpp"
#include "it2near/server.hpp"
#include "it2near/synthetic.hpp"

namespace fs = std::filesystem;
using namespace it2near;

namespace {

enum Exit : int {
    ok = 0,
    other = 1,
    usage = 2,
    invalid_parameter = 3,
    image_too_small = 4,
    unknown_probe = 5,
    dimension_mismatch = 6,
    fit_not_found = 7,
    fingerprint_mismatch = 8,
    empty_retrieval = 9,
    dataset_error = 10,
    index_format = 11,
    decode_error = 12,
    budget_exceeded = 13,
};

struct DescriptionFlags {
    int block_width = 13;
    int block_height = 19;
    std::string probes;
    std::string bank_family = "it2beta";
    int terms = 3;
    double spread = 0.1;
    double alpha = 2.0;
    double beta = 2.0;
    std::string center_mode = "symmetric";

    std::vector<CLI::Option*> options;

    void attach(CLI::App& app) {
        options = {
            app.add_option("--block-width", block_width, "Block width in pixels"),
            app.add_option("--block-height", block_height, "Block height in pixels"),
            app.add_option("--probes", probes, "Comma-separated probe ids (default: all built-in probes)"),
            app.add_option("--bank-family", bank_family, "triangular|trapezoidal|gaussian|beta|it2beta"),
            app.add_option("--terms", terms, "Linguistic terms per feature"),
            app.add_option("--alpha", alpha, "Beta shape alpha"),
            app.add_option("--beta", beta, "Beta shape beta"),
            app.add_option("--center-mode", center_mode, "IT2 center rule: symmetric|literal"),
        };
        app.add_option("--spread", spread, "IT2 center spread");
    }

    bool any_given() const {
        for (const auto* o : options)
            if (o->count() > 0) return true;
        return false;
    }

    DescriptionConfig config() const {
        DescriptionConfig cfg;
        cfg.block_width = block_width;
        cfg.block_height = block_height;
        if (!probes.empty()) {
            cfg.probes.clear();
            std::stringstream s(probes);
            for (std::string p; std::getline(s, p, ',');)
                if (!trim(p).empty()) cfg.probes.push_back(trim(p));
        }
        cfg.bank.family = parse_bank_family(bank_family);
        cfg.bank.terms = terms;
        cfg.bank.it2_spread = spread;
        cfg.bank.alpha = alpha;
        cfg.bank.beta = beta;
        cfg.bank.center_mode = parse_center_mode(center_mode);
        cfg.validate();
        return cfg;
    }
};

struct ToleranceFlags {
    double epsilon = 0.3;
    double epsilon_prime = 0.45;
    std::string distance_mode = "full-vector";
    std::size_t max_cliques = 500000;
    long long time_budget_ms = 10000;
    std::string envelope = "lower";

    void attach(CLI::App& app) {
        app.add_option("--epsilon", epsilon, "Tolerance threshold epsilon");
        app.add_option("--epsilon-prime", epsilon_prime, "Fuzzy support bound epsilon' (> epsilon)");
        app.add_option("--distance-mode", distance_mode, "full-vector|existential");
        app.add_option("--max-cliques", max_cliques, "Clique cap per comparison");
        app.add_option("--time-budget-ms", time_budget_ms, "Clique enumeration time budget per comparison");
        app.add_option("--envelope", envelope, "Description envelope for tnm and tfnm: lower|upper");
    }

    ToleranceConfig tolerance() const {
        ToleranceConfig t;
        t.epsilon = epsilon;
        t.epsilon_prime = epsilon_prime;
        if (distance_mode == "full-vector")
            t.distance_mode = DistanceMode::full_vector;
        else if (distance_mode == "existential")
            t.distance_mode = DistanceMode::per_feature_existential;
        else
            throw InvalidParameter("unknown distance mode '" + distance_mode + "'");
        t.validate();
        return t;
    }

    CliqueLimits limits() const {
        if (max_cliques == 0 || time_budget_ms <= 0) throw InvalidParameter("clique budgets must be positive");
        return {max_cliques, std::chrono::milliseconds(time_budget_ms)};
    }

    Envelope env() const {
        if (envelope == "lower") return Envelope::lower;
        if (envelope == "upper") return Envelope::upper;
        throw InvalidParameter("unknown envelope '" + envelope + "'");
    }
};

std::ofstream open_output(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InvalidParameter("cannot open output file " + p.string());
    return out;
}

std::vector<double> parse_reals(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    for (std::string tok; std::getline(in, tok, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(trim(tok), &used));
        } catch (const std::exception&) {
            throw InvalidParameter("cannot parse number '" + tok + "'");
        }
    }
    return out;
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

/// Index used for queries: the stored one, re-fuzzified when a different
/// spread is requested.
DatasetIndex with_spread(DatasetIndex index, const CLI::Option* spread_opt, double spread, unsigned jobs) {
    if (spread_opt->count() == 0 || spread == index.config.bank.it2_spread) return index;
    auto bank = index.config.bank;
    bank.it2_spread = spread;
    return rebank_index(index, bank, jobs);
}

// ---------------------------------------------------------------------------

int run_index(const fs::path& dataset, const fs::path& out, const DescriptionConfig& cfg, unsigned jobs) {
    IndexBuildReport report;
    std::cerr << "indexing " << dataset.string() << '\n';
    const auto index = build_index(dataset, cfg, decode_image_file, jobs, &report);
    for (const auto& f : report.failures) std::cerr << "skipped " << f.filename << ": " << f.reason << '\n';
    save_index(out, index);
    std::size_t blocks = 0;
    for (const auto& im : index.images) blocks += im.objects.size();
    std::cerr << "indexed " << index.images.size() << " images, " << blocks << " blocks, fingerprint "
              << index.fingerprint << '\n';
    return ok;
}

struct QueryArgs {
    fs::path index_path, image, out, dump_classes;
    int id = -1;
    int dump_candidate = -1;
    std::string measure = "it2bfnm";
    std::size_t top = 40;
};

void dump_classes(std::ostream& os, const QueryImage& q, const IndexedImage& cand, Measure m,
                  const ToleranceConfig& tol, const CliqueLimits& limits, Envelope env) {
    os << "envelope,class_id,side,image_id,row,col,mu\n";
    std::vector<Envelope> envs;
    if (m == Measure::it2bfnm)
        envs = {Envelope::upper, Envelope::lower};
    else
        envs = {env};
    for (const auto e : envs) {
        const auto classes = tolerance_classes(q.objects, cand.objects, tol, m != Measure::tnm, e, limits);
        for (std::size_t c = 0; c < classes.size(); ++c)
            for (std::size_t k = 0; k < classes[c].members.size(); ++k) {
                const auto z = classes[c].members[k];
                const bool in_x = z < q.objects.size();
                const auto& o = in_x ? q.objects[z] : cand.objects[z - q.objects.size()];
                os << to_string(e) << ',' << c << ',' << (in_x ? "query" : "candidate") << ','
                   << (in_x ? (q.image_id ? std::to_string(*q.image_id) : q.tag) : std::to_string(cand.id)) << ','
                   << o.id.row << ',' << o.id.col << ',' << format_real(classes[c].mu[k]) << '\n';
            }
    }
}

int run_query(const QueryArgs& a, const DescriptionFlags& desc, const CLI::Option* spread_opt,
              const ToleranceFlags& tf, unsigned jobs) {
    QueryOptions qo;
    qo.measure = parse_measure(a.measure);
    qo.tolerance = tf.tolerance();
    qo.limits = tf.limits();
    qo.envelope = tf.env();
    qo.k = a.top;
    qo.jobs = jobs;
    qo.validate();

    const auto index = with_spread(load_index(a.index_path), spread_opt, desc.spread, jobs);
    QueryImage q;
    if (!a.image.empty()) {
        const Image img = decode_image_file(a.image);
        if (desc.any_given()) {
            auto cfg = desc.config();
            if (spread_opt->count() == 0) cfg.bank.it2_spread = index.config.bank.it2_spread;
            q = external_query(index, img, a.image.stem().string(), &cfg);
        } else {
            q = external_query(index, img, a.image.stem().string());
        }
    } else {
        q = indexed_query(index, a.id);
    }
    const auto result = query(index, q, qo);

    std::size_t flagged = 0;
    std::ostringstream csv;
    csv << "query_id,candidate_id,measure,value,upper,lower,classes,budget_flag\n";
    for (const auto& it : result.items) {
        csv << q.tag << ',' << it.image_id << ',' << to_string(qo.measure) << ',' << format_real(it.score.value) << ','
            << optional_real(it.score.upper) << ',' << optional_real(it.score.lower) << ',' << it.score.classes << ','
            << to_string(it.score.status) << '\n';
        if (it.score.approximate()) ++flagged;
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_output(a.out);
        out << csv.str();
    }
    if (flagged) std::cerr << "warning: " << flagged << " comparisons hit a clique budget; their scores are partial\n";

    if (!a.dump_classes.empty()) {
        const int cand_id = a.dump_candidate >= 0 ? a.dump_candidate : (result.items.empty() ? -1 : result.items[0].image_id);
        const auto* cand = index.find(cand_id);
        if (!cand) throw InvalidParameter("dump candidate " + std::to_string(cand_id) + " is not in the index");
        auto out = open_output(a.dump_classes);
        dump_classes(out, q, *cand, qo.measure, qo.tolerance, qo.limits, qo.envelope);
    }
    return ok;
}

struct EvalArgs {
    fs::path index_path, out, pr_out;
    std::string measure = "it2bfnm";
    std::size_t depth = 100;
    std::size_t pr_depth = 40;
    std::vector<int> exclude_categories;
    bool exclude_self = false;
};

int run_eval(const EvalArgs& a, double spread, const CLI::Option* spread_opt,
             const ToleranceFlags& tf, unsigned jobs) {
    EvalOptions eo;
    eo.measure = parse_measure(a.measure);
    eo.tolerance = tf.tolerance();
    eo.limits = tf.limits();
    eo.envelope = tf.env();
    eo.depth = a.depth;
    eo.pr_depth = a.pr_depth;
    eo.exclude_self = a.exclude_self;
    eo.exclude_categories.insert(a.exclude_categories.begin(), a.exclude_categories.end());
    eo.jobs = jobs;

    const auto index = with_spread(load_index(a.index_path), spread_opt, spread, jobs);
    std::cerr << "evaluating " << index.images.size() << " images with " << a.measure << '\n';
    const auto report = evaluate(index, eo);

    std::ostringstream table;
    table << "category,avg_precision\n";
    for (const auto& [cat, p] : report.category_precision) table << cat << ',' << format_real(p) << '\n';
    if (a.out.empty()) {
        std::cout << table.str();
    } else {
        auto out = open_output(a.out);
        out << table.str();
    }
    if (!a.pr_out.empty()) {
        auto out = open_output(a.pr_out);
        out << "k,precision,recall\n";
        for (const auto& p : report.mean_curve)
            out << p.k << ',' << format_real(p.precision) << ',' << format_real(p.recall) << '\n';
    }
    if (report.approximate_comparisons)
        std::cerr << "warning: " << report.approximate_comparisons
                  << " comparisons hit a clique budget; their scores are partial\n";
    return ok;
}

struct PlotArgs {
    std::string family = "beta";
    std::string params;
    std::size_t samples = 101;
    double from = 0.0;
    double to = 1.0;
    fs::path out;
};

int run_mf_plot(const PlotArgs& a) {
    const auto p = parse_reals(a.params);
    auto need = [&](std::size_t n, const char* layout) {
        if (p.size() != n)
            throw InvalidParameter("--params for " + a.family + " needs " + std::to_string(n) + " values: " + layout);
    };
    if (a.samples < 2) throw InvalidParameter("--samples must be at least 2");
    if (!(a.to > a.from)) throw InvalidParameter("--to must be greater than --from");

    std::function<std::string(double)> row;
    std::string header = "x,grade";
    if (a.family == "beta") {
        need(4, "alpha,beta,x_min,x_max");
        const BetaMF mf(p[0], p[1], p[2], p[3]);
        row = [mf](double x) { return format_real(mf(x)); };
    } else if (a.family == "beta-centered") {
        need(4, "center,width,alpha,beta");
        (void)BetaMF::from_center(p[0], p[1], p[2], p[3]);
        row = [p](double x) { return format_real(eval_beta_centered(p[0], p[1], p[2], p[3], x)); };
    } else if (a.family == "triangular") {
        need(2, "a,b");
        const Triangular mf(p[0], p[1]);
        row = [mf](double x) { return format_real(mf(x)); };
    } else if (a.family == "trapezoidal") {
        need(4, "a,b,c,d");
        const Trapezoidal mf(p[0], p[1], p[2], p[3]);
        row = [mf](double x) { return format_real(mf(x)); };
    } else if (a.family == "gaussian") {
        need(2, "mu,sigma");
        const Gaussian mf(p[0], p[1]);
        row = [mf](double x) { return format_real(mf(x)); };
    } else if (a.family == "it2beta") {
        need(5, "alpha,beta,x_min,x_max,spread");
        const auto mf = IT2BetaMF::symmetric(BetaMF(p[0], p[1], p[2], p[3]), p[4]);
        header = "x,lower,upper";
        row = [mf](double x) {
            const auto g = mf(x);
            return format_real(g.lower) + ',' + format_real(g.upper);
        };
    } else {
        throw InvalidParameter("unknown family '" + a.family + "'");
    }

    std::ostringstream csv;
    csv << header << '\n';
    for (std::size_t i = 0; i < a.samples; ++i) {
        const double x = a.from + (a.to - a.from) * static_cast<double>(i) / static_cast<double>(a.samples - 1);
        csv << format_real(x) << ',' << row(x) << '\n';
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        auto out = open_output(a.out);
        out << csv.str();
    }
    return ok;
}

struct SynthArgs {
    fs::path out;
    std::string patterns = "stripes,checker,gradient";
    int count = 10;
    int width = 384;
    int height = 256;
    int noise = 3;
};

int run_gen_synthetic(const SynthArgs& a, std::uint64_t seed) {
    std::vector<Pattern> patterns;
    std::stringstream s(a.patterns);
    for (std::string p; std::getline(s, p, ',');) patterns.push_back(parse_pattern(trim(p)));
    if (patterns.empty()) throw InvalidParameter("no pattern given");
    SyntheticOptions so;
    so.width = a.width;
    so.height = a.height;
    so.noise = a.noise;
    const auto images = generate_dataset(patterns, a.count, seed, so);
    fs::create_directories(a.out);
    std::ofstream labels = open_output(a.out / "labels.csv");
    labels << "filename,category\n";
    for (const auto& im : images) {
        const std::string name = std::to_string(im.id) + ".png";
        write_image_file(a.out / name, im.image);
        labels << name << ',' << im.category << '\n';
    }
    std::cerr << "wrote " << images.size() << " images to " << a.out.string() << '\n';
    return ok;
}

struct ServeArgs {
    fs::path index_path, ui_dir, dataset;
    std::string host = "127.0.0.1";
    int port = 8080;
};

int run_serve(const ServeArgs& a, const ToleranceFlags& tf, unsigned jobs) {
    ServiceOptions so;
    so.dataset_root = a.dataset.string();
    so.ui_dir = a.ui_dir.string();
    so.jobs = jobs;
    so.limits = tf.limits();
    so.tolerance = tf.tolerance();
    QueryService svc(load_index(a.index_path), so);
    httplib::Server server;
    mount_service(server, svc);
    std::cerr << "serving " << svc.index().images.size() << " images on http://" << a.host << ':' << a.port << '\n';
    if (!server.listen(a.host, a.port)) throw InvalidParameter("cannot listen on " + a.host + ':' + std::to_string(a.port));
    return ok;
}

int report(const char* kind, const std::exception& e, int code) {
    std::cerr << "error (" << kind << "): " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image retrieval with tolerance near-set nearness measures"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    unsigned jobs = 1;
    std::uint64_t seed = 0;
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed for synthetic data");

    auto* idx = app.add_subcommand("index", "Describe every image of a dataset and write an index file");
    fs::path dataset, index_out;
    idx->add_option("--dataset", dataset, "Dataset directory")->required();
    idx->add_option("--out", index_out, "Index file to write")->required();
    DescriptionFlags idx_desc;
    idx_desc.attach(*idx);

    auto* qry = app.add_subcommand("query", "Rank indexed images against a query image");
    QueryArgs qa;
    qry->add_option("--index", qa.index_path, "Index file")->required();
    auto* q_image = qry->add_option("--image", qa.image, "Query image file");
    auto* q_id = qry->add_option("--id", qa.id, "Indexed image id to use as the query");
    q_image->excludes(q_id);
    qry->add_option("--measure", qa.measure, "tnm|tfnm|it2bfnm");
    qry->add_option("--top", qa.top, "Number of results");
    qry->add_option("--out", qa.out, "Result CSV (default: standard output)");
    qry->add_option("--dump-classes", qa.dump_classes, "Write the tolerance classes of one comparison to this CSV");
    qry->add_option("--dump-candidate", qa.dump_candidate, "Candidate id for --dump-classes (default: rank 1)");
    DescriptionFlags q_desc;
    q_desc.attach(*qry);
    ToleranceFlags q_tol;
    q_tol.attach(*qry);

    auto* ev = app.add_subcommand("eval", "Per-category average precision with every image as a query");
    EvalArgs ea;
    ev->add_option("--index", ea.index_path, "Index file")->required();
    ev->add_option("--measure", ea.measure, "tnm|tfnm|it2bfnm");
    ev->add_option("--depth", ea.depth, "Precision depth");
    ev->add_option("--out", ea.out, "Category table CSV (default: standard output)");
    ev->add_option("--pr-out", ea.pr_out, "Mean precision/recall curve CSV");
    ev->add_option("--pr-depth", ea.pr_depth, "Curve length");
    ev->add_option("--exclude-category", ea.exclude_categories, "Category to leave out (repeatable)");
    ev->add_flag("--exclude-self", ea.exclude_self, "Drop each query from its own ranking");
    double e_spread = 0.1;
    auto* e_spread_opt = ev->add_option("--spread", e_spread, "IT2 center spread (re-fuzzifies the index when it differs)");
    ToleranceFlags e_tol;
    e_tol.attach(*ev);

    auto* plot = app.add_subcommand("mf-plot", "Sample a membership function to CSV");
    PlotArgs pa;
    plot->add_option("--family", pa.family, "beta|beta-centered|triangular|trapezoidal|gaussian|it2beta");
    plot->add_option("--params", pa.params, "Comma-separated parameters")->required();
    plot->add_option("--samples", pa.samples, "Number of sample points");
    plot->add_option("--from", pa.from, "First x");
    plot->add_option("--to", pa.to, "Last x");
    plot->add_option("--out", pa.out, "Output CSV (default: standard output)");

    auto* gen = app.add_subcommand("gen-synthetic", "Write a seeded synthetic dataset");
    SynthArgs sa;
    gen->add_option("--out", sa.out, "Output directory")->required();
    gen->add_option("--pattern", sa.patterns, "Comma-separated patterns: stripes,checker,gradient");
    gen->add_option("--count", sa.count, "Images per pattern");
    gen->add_option("--width", sa.width, "Image width");
    gen->add_option("--height", sa.height, "Image height");
    gen->add_option("--noise", sa.noise, "Per-channel noise amplitude");

    auto* srv = app.add_subcommand("serve", "Serve the JSON query API and an optional UI bundle");
    ServeArgs va;
    srv->add_option("--index", va.index_path, "Index file")->required();
    srv->add_option("--host", va.host, "Bind address");
    srv->add_option("--port", va.port, "Port");
    srv->add_option("--ui-dir", va.ui_dir, "Static UI directory served at /");
    srv->add_option("--dataset", va.dataset, "Dataset directory (default: the one recorded in the index)");
    ToleranceFlags s_tol;
    s_tol.attach(*srv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*idx) return run_index(dataset, index_out, idx_desc.config(), jobs);
        if (*qry) {
            if (q_image->count() == 0 && q_id->count() == 0) throw CLI::RequiredError("--image or --id");
            return run_query(qa, q_desc, qry->get_option("--spread"), q_tol, jobs);
        }
        if (*ev) return run_eval(ea, e_spread, e_spread_opt, e_tol, jobs);
        if (*plot) return run_mf_plot(pa);
        if (*gen) return run_gen_synthetic(sa, seed);
        if (*srv) return run_serve(va, s_tol, jobs);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const InvalidParameter& e) {
        return report("InvalidParameter", e, invalid_parameter);
    } catch (const ImageTooSmall& e) {
        return report("ImageTooSmall", e, image_too_small);
    } catch (const UnknownProbe& e) {
        return report("UnknownProbe", e, unknown_probe);
    } catch (const DimensionMismatch& e) {
        return report("DimensionMismatch", e, dimension_mismatch);
    } catch (const FitNotFound& e) {
        return report("FitNotFound", e, fit_not_found);
    } catch (const FingerprintMismatch& e) {
        return report("FingerprintMismatch", e, fingerprint_mismatch);
    } catch (const EmptyRetrieval& e) {
        return report("EmptyRetrieval", e, empty_retrieval);
    } catch (const NoRelevantImages& e) {
        return report("NoRelevantImages", e, empty_retrieval);
    } catch (const DatasetError& e) {
        return report("DatasetError", e, dataset_error);
    } catch (const IndexFormatError& e) {
        return report("IndexFormatError", e, index_format);
    } catch (const DecodeError& e) {
        return report("DecodeError", e, decode_error);
    } catch (const BudgetExceeded& e) {
        return report("BudgetExceeded", e, budget_exceeded);
    } catch (const std::exception& e) {
        return report("error", e, other);
    }
    return usage;
}
