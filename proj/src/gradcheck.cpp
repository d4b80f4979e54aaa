#include "synlink/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "synlink/preference.hpp"
#include "synlink/random.hpp"
#include "synlink/train_positive.hpp"

namespace synlink {

GradCheckResult check_gradient(const std::string& name, const LossFunction& loss,
                               const Parameters& at, std::uint64_t seed,
                               const GradCheckConfig& cfg) {
    GradCheckResult res;
    res.loss = name;
    res.seed = seed;

    Parameters grad = at.zeros_like();
    loss(at, &grad);

    Parameters probe = at;
    auto probe_arrays = probe.arrays();
    const auto grad_arrays = grad.arrays();
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    res.passed = true;
    for (std::size_t c = 0; c < cfg.coordinates; ++c) {
        const std::size_t a = rng.below(probe_arrays.size());
        auto values = probe_arrays[a].values();
        const std::size_t j = rng.below(values.size());
        const double original = values[j];
        values[j] = original + cfg.step;
        const double plus = loss(probe, nullptr);
        values[j] = original - cfg.step;
        const double minus = loss(probe, nullptr);
        values[j] = original;

        CoordinateCheck cc;
        cc.array = std::string(probe_arrays[a].name);
        cc.offset = j;
        cc.analytic = grad_arrays[a].values()[j];
        cc.numeric = (plus - minus) / (2.0 * cfg.step);
        cc.rel_error = std::fabs(cc.analytic - cc.numeric) / std::max(1.0, std::fabs(cc.analytic));
        res.max_rel_error = std::max(res.max_rel_error, cc.rel_error);
        if (!(cc.rel_error <= cfg.tolerance)) {
            res.passed = false;
        }
        res.coords.push_back(std::move(cc));
    }
    return res;
}

namespace {

Parameters random_parameters(int vocab_size, int hidden, double range, Rng& rng) {
    Parameters p(vocab_size, hidden);
    for (auto& a : p.arrays()) {
        for (double& x : a.values()) {
            x = rng.uniform(-range, range);
        }
    }
    return p;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckConfig& cfg) {
    const std::vector<std::string> corpus = {"chronic pain", "adhd", "hyperkinetic disorder",
                                             "attention deficit"};
    const Vocab vocab = Vocab::from_texts(corpus);

    MentionExample ex;
    ex.left = "patient with ";
    ex.mention = "adhd";
    ex.right = " and chronic pain";
    const EncodedInput input = render(ex, vocab);

    PositiveInstance inst;
    inst.input = input;
    inst.target_name = "attention deficit";
    inst.target = vocab.encode_entity(inst.target_name);

    PreferenceTriplet trip;
    trip.input = input;
    trip.preferred = "hyperkinetic disorder";
    trip.dispreferred = "adhd";

    std::vector<GradCheckResult> out;
    for (std::uint64_t seed : cfg.seeds) {
        Rng rng(seed);
        const Parameters params = random_parameters(vocab.size(), cfg.hidden_dim, cfg.init_range, rng);
        const Parameters ref = random_parameters(vocab.size(), cfg.hidden_dim, cfg.init_range, rng);

        out.push_back(check_gradient(
            "cross_entropy",
            [&](const Parameters& p, Parameters* g) { return ce_loss(p, inst, 0.1, g); }, params,
            seed, cfg));
        for (LossKind kind : {LossKind::kPairwise, LossKind::kDpo, LossKind::kCpo, LossKind::kSimpo}) {
            PreferenceConfig pc;
            pc.loss = kind;
            const auto refs = reference_scores(ref, vocab, trip);
            out.push_back(check_gradient(
                std::string(loss_kind_name(kind)),
                [&](const Parameters& p, Parameters* g) {
                    return preference_loss(p, vocab, refs, trip, pc, g);
                },
                params, seed, cfg));
        }
    }
    return out;
}

}  // namespace synlink
