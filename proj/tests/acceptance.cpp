// Acceptance run: one PASS/FAIL line per criterion.
// Exit status is 1 when a criterion fails that is not marked allowed_to_fail.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "vsumm/clustering.hpp"
#include "vsumm/human_eval.hpp"
#include "vsumm/metrics.hpp"
#include "vsumm/partitioning.hpp"
#include "vsumm/pca.hpp"
#include "vsumm/sampling.hpp"
#include "vsumm/summary.hpp"
#include "vsumm/survey.hpp"
#include "vsumm/tsne.hpp"

using namespace vsumm;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Verdict()> run;
    bool allowed_to_fail = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict knapsack_oracle() {
    std::mt19937_64 rng(101);
    const auto t0 = std::chrono::steady_clock::now();
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 15;
        std::vector<double> values(n);
        std::vector<Index> weights(n);
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] = 1 + static_cast<Index>(rng() % 60);
            values[i] = static_cast<double>(rng() % 100000) / 100.0;
        }
        const Index cap = static_cast<Index>(rng() % 201);
        const auto dp = knapsack(values, weights, cap);
        const auto brute = oracle::knapsack_brute(values, weights, cap);
        if (dp.value != brute.value && std::abs(dp.value - brute.value) > 1e-9) ++mismatches;
        else if (std::vector<bool>(dp.chosen.begin(), dp.chosen.end()) != brute.chosen) ++mismatches;
    }
    const double s = seconds_since(t0);
    std::ostringstream d;
    d << mismatches << " mismatches in 200 instances, " << s << " s";
    return {mismatches == 0 && s < 5.0, d.str()};
}

Verdict refinement_oracle() {
    std::mt19937_64 rng(202);
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 200);
        LabelSequence labels(static_cast<std::size_t>(n));
        const unsigned k = 1 + static_cast<unsigned>(rng() % 8);
        for (auto& x : labels) x = static_cast<int>(rng() % k);
        const Index eps = std::vector<Index>{2, 4, 8}[rng() % 3];
        const auto init = init_partitions(labels);
        const auto refined = refine_partitions(init, eps);
        bool ok = refined.lengths() == oracle::refine_literal(init.lengths(), eps);
        for (Index len : refined.lengths()) ok = ok && len >= std::min(eps, n);
        try {
            validate(refined, n);
        } catch (const ValidationError&) {
            ok = false;
        }
        bad += !ok;
    }
    return {bad == 0, std::to_string(bad) + " of 1000 sequences disagree"};
}

Verdict f_measure_suite() {
    bool ok = f_measure({1, 2, 3}, {1, 2, 3}, 10) == 1.0;
    ok = ok && f_measure({1, 2}, {3, 4}, 10) == 0.0;
    ok = ok && std::abs(f_measure({1, 2, 3, 4}, {3, 4, 5, 6}, 10) - 0.5) <= 1e-12;
    std::mt19937_64 rng(303);
    int bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const Index total = 1 + static_cast<Index>(rng() % 80);
        std::vector<Index> s, u;
        for (Index f = 1; f <= total; ++f) {
            if (rng() % 3 == 0) s.push_back(f);
            if (rng() % 4 == 0) u.push_back(f);
        }
        const double a = f_measure(s, u, total), b = f_measure(u, s, total);
        const bool good = a == b && a >= 0.0 && a <= 1.0 &&
                          std::abs(a - oracle::f_measure_sets({s.begin(), s.end()}, {u.begin(), u.end()})) <= 1e-12 &&
                          (f_measure(s, s, total) == (s.empty() ? 0.0 : 1.0));
        bad += !good;
    }
    return {ok && bad == 0, std::string(ok ? "examples exact" : "example mismatch") + ", " + std::to_string(bad) + " of 10000 pairs violate"};
}

Verdict sampling_properties() {
    int bad = 0, checked = 0;
    for (int fps = 15; fps <= 30; ++fps)
        for (Index total = 1; total <= 10000; total += (total < 300 ? 1 : 37)) {
            ++checked;
            const auto p = plan_sampling(total, fps, 4.0);
            bool ok = p.count() >= 1;
            for (std::size_t i = 0; i < p.indexes.size(); ++i) {
                ok = ok && p.indexes[i] >= 1 && p.indexes[i] <= total;
                if (i) ok = ok && p.indexes[i] - p.indexes[i - 1] == p.snippet_length;
            }
            ok = ok && p.indexes.back() + p.snippet_length > total;
            if ((total - p.first_index) % p.snippet_length != 0)
                ok = ok && p.count() == static_cast<Index>(std::ceil(static_cast<double>(total - p.first_index) / static_cast<double>(p.snippet_length)));
            for (Index l = 1; l <= 60; ++l)
                ok = ok && std::abs(fps / static_cast<double>(p.snippet_length) - 4.0) <= std::abs(fps / static_cast<double>(l) - 4.0) + 1e-12;
            bad += !ok;
        }
    return {bad == 0, std::to_string(bad) + " of " + std::to_string(checked) + " plans violate"};
}

Verdict pca_properties() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_orth = 0.0, worst_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index rows = 8 + static_cast<Index>(rng() % 30), cols = 2 + static_cast<Index>(rng() % 9);
        Matrix x(rows, cols);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) x(r, c) = normal(rng) * (1.0 + static_cast<double>(c));
        const Index k = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min(rows, cols)));
        const auto fit = pca_fit_transform(x, k);
        const Matrix gram = fit.model.components.transpose() * fit.model.components;
        worst_orth = std::max(worst_orth, (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());
        const auto eig = oracle::jacobi_eigenvalues(oracle::covariance_loops(x));
        double discarded = 0.0;
        for (std::size_t i = static_cast<std::size_t>(k); i < eig.size(); ++i) discarded += eig[i];
        const double sse = (x - fit.model.inverse_transform(fit.projected)).squaredNorm() / static_cast<double>(rows - 1);
        double total = 0.0;
        for (double e : eig) total += e;
        worst_rel = std::max(worst_rel, std::abs(sse - discarded) / total);
    }
    std::ostringstream d;
    d << "max |C^T C - I| " << worst_orth << ", max relative reconstruction gap " << worst_rel;
    return {worst_orth <= 1e-8 && worst_rel <= 1e-6, d.str()};
}

Matrix two_blobs(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix x(40, 6);
    for (Index i = 0; i < 40; ++i)
        for (Index c = 0; c < 6; ++c) x(i, c) = n(rng) + (i >= 20 && c == 0 ? 60.0 : 0.0);
    return x;
}

Verdict tsne_properties() {
    const Matrix x = two_blobs(505);
    double worst = 0.0;
    const Matrix p = conditional_affinities(squared_distances(x), 10.0);
    for (Index i = 0; i < p.rows(); ++i) worst = std::max(worst, std::abs(oracle::row_perplexity(p, i) - 10.0));

    TsneConfig cfg;
    cfg.seed = 5;
    const auto a = tsne(x, cfg), b = tsne(x, cfg);
    const bool bitwise = std::memcmp(a.embedding.data(), b.embedding.data(), sizeof(double) * static_cast<std::size_t>(a.embedding.size())) == 0;
    // Blob membership by nearest of the two blob centroids in the output.
    const Eigen::RowVectorXd c0 = a.embedding.topRows(20).colwise().mean(), c1 = a.embedding.bottomRows(20).colwise().mean();
    int mislabels = 0;
    for (Index i = 0; i < 40; ++i) {
        const bool nearer0 = (a.embedding.row(i) - c0).norm() < (a.embedding.row(i) - c1).norm();
        mislabels += nearer0 != (i < 20);
    }
    std::ostringstream d;
    d << "perplexity error " << worst << ", KL " << a.initial_kl << " -> " << a.final_kl << ", bitwise " << (bitwise ? "yes" : "no")
      << ", mislabels " << mislabels;
    return {worst <= 1e-3 && a.final_kl < a.initial_kl && bitwise && mislabels == 0, d.str()};
}

Verdict clustering_properties() {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    int refine_bad = 0, brute_bad = 0, brute_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 5 + static_cast<Index>(rng() % 80), d = 1 + static_cast<Index>(rng() % 5);
        Matrix x(n, d);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
        const auto coarse = birch_coarse(x, {1.0 + u(rng) / 5.0 + 2.0, 3 + static_cast<int>(rng() % 20)}).labels;
        const int k = 1 + static_cast<int>(rng() % 12);
        const auto fine = agglomerative_fine(x, coarse, k, static_cast<Linkage>(rng() % 3), DistanceKind::Euclidean).labels;
        for (std::size_t i = 0; i < coarse.size(); ++i)
            for (std::size_t j = 0; j < coarse.size(); ++j)
                if (coarse[i] == coarse[j] && fine[i] != fine[j]) {
                    ++refine_bad;
                    i = j = coarse.size();
                }
    }
    for (int trial = 0; trial < 100; ++trial) {
        const int atoms = 2 + static_cast<int>(rng() % 7);
        const Index n = atoms + static_cast<Index>(rng() % 6);
        Matrix x(n, 2);
        for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
        LabelSequence coarse(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) coarse[static_cast<std::size_t>(i)] = i < atoms ? static_cast<int>(i) : static_cast<int>(rng() % static_cast<unsigned>(atoms));
        const int k = 2 + static_cast<int>(rng() % static_cast<unsigned>(atoms - 1));
        if (k > atoms) continue;
        Matrix atom_dist = Matrix::Constant(atoms, atoms, std::numeric_limits<double>::infinity());
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                const int a = coarse[static_cast<std::size_t>(i)], b = coarse[static_cast<std::size_t>(j)];
                if (a != b) atom_dist(a, b) = std::min(atom_dist(a, b), (x.row(i) - x.row(j)).norm());
            }
        const auto r = agglomerative_fine(x, coarse, k, Linkage::Single, DistanceKind::Euclidean);
        std::vector<std::vector<int>> optima;
        oracle::best_single_link_spacing(atom_dist, k, &optima);
        std::vector<int> ours(static_cast<std::size_t>(atoms));
        for (Index i = 0; i < n; ++i) ours[static_cast<std::size_t>(coarse[static_cast<std::size_t>(i)])] = r.labels[static_cast<std::size_t>(i)];
        bool found = false;
        for (const auto& o : optima) found = found || canonicalize(o) == canonicalize(ours);
        ++brute_cases;
        brute_bad += !found;
    }
    std::ostringstream d;
    d << refine_bad << " of 100 datasets break refinement, " << brute_bad << " of " << brute_cases << " single-link cases differ from brute force";
    return {refine_bad == 0 && brute_bad == 0, d.str()};
}

Verdict end_to_end_synthetic() {
    const auto e2e = synth::run_end_to_end(4);
    const double recall = static_cast<double>(e2e.recovered) / static_cast<double>(e2e.boundaries);
    const double margin = e2e.avg_f - e2e.baseline_avg_f;
    std::ostringstream d;
    d << "boundaries " << e2e.recovered << "/" << e2e.boundaries << " (need >= 80%), avg-f " << e2e.avg_f << " vs random "
      << e2e.baseline_avg_f << " (margin " << margin << ", need >= 0.15), " << e2e.seconds << " s";
    return {recall >= 0.8 && margin >= 0.15 && e2e.seconds < 60.0, d.str()};
}

Verdict human_eval_fixture() {
    const auto bank = load_question_bank(read_text_file(VSUMM_FIXTURES "/question_bank.json"));
    const auto rep = score_answers(bank, parse_answer_log(read_text_file(VSUMM_FIXTURES "/answers.log")));
    const auto& ours = rep.videos.at("v1").at("ours");
    const bool ok = ours.questions.at("q1") == 0.5 && std::abs(ours.questions.at("q2") - 2.0 / 3.0) <= 1e-15 &&
                    std::abs(ours.questions.at("q3") - 0.85) <= 1e-15 && std::abs(*ours.overall - 121.0 / 180.0) <= 1e-15 &&
                    *rep.videos.at("v1").at("user").overall == 1.0 && std::abs(rep.methods.at("ours") - 121.0 / 180.0) <= 1e-15 &&
                    rep.methods.at("user") == 1.0;
    // The 1/3 IoU case on its own.
    const bool iou = std::abs(checkbox_score({"car", "dog"}, {"dog", "tree"}) - 1.0 / 3.0) <= 1e-15;
    std::ostringstream d;
    d << "q1 " << ours.questions.at("q1") << ", q2 " << ours.questions.at("q2") << ", q3 " << ours.questions.at("q3") << ", U(ours) "
      << rep.methods.at("ours") << ", U(user) " << rep.methods.at("user");
    return {ok && iou, d.str()};
}

Verdict cluster_count_law() {
    bool ok = cluster_count(60, 1e-3, 0) == 1 && cluster_count(60, 1e-3, 2880) == 54;
    int prev = 1;
    for (int l = 0; l <= 100000; ++l) {
        const int k = cluster_count(60, 1e-3, l);
        ok = ok && k >= prev && k <= 60;
        prev = k;
    }
    return {ok, "K(0)=" + std::to_string(cluster_count(60, 1e-3, 0)) + ", K(2880)=" + std::to_string(cluster_count(60, 1e-3, 2880)) +
                    ", monotone on [0, 1e5]"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"knapsack DP equals brute force (200 instances, < 5 s)", knapsack_oracle},
        {"partition refinement equals literal interpreter (1000 sequences)", refinement_oracle},
        {"f-measure examples and properties (10^4 pairs)", f_measure_suite},
        {"sampling plan properties (r_I 15..30, R=4, T <= 10^4)", sampling_properties},
        {"PCA orthonormality and reconstruction identity (100 matrices)", pca_properties},
        {"t-SNE perplexity, KL decrease, bitwise seed, blob separation", tsne_properties},
        {"clustering refinement invariant and single-link brute force", clustering_properties},
        {"end-to-end synthetic (boundaries >= 80%, f margin >= 0.15, < 60 s)", end_to_end_synthetic, true},
        {"human-eval fixture scores", human_eval_fixture},
        {"cluster-count law", cluster_count_law},
    };
    int hard_failures = 0;
    for (const auto& c : criteria) {
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (v.pass ? "PASS" : "FAIL") << "  " << c.name << "  [" << v.detail << "]";
        if (!v.pass && c.allowed_to_fail) std::cout << "  (allowed to fail)";
        std::cout << std::endl;
        if (!v.pass && !c.allowed_to_fail) ++hard_failures;
    }
    std::cout << "SKIP  SumMe reproduction, avg-f within 3.0 of 54.48 (external: needs the dataset and a backbone; not run in CI)"
              << std::endl;
    return hard_failures == 0 ? 0 : 1;
}
