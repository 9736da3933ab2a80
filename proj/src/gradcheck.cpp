#include "hirpcn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "hirpcn/error.hpp"
#include "hirpcn/idgraph.hpp"
#include "hirpcn/seed.hpp"

namespace hirpcn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const GradCheckConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> letters = {"A", "B"};
  const auto tax = make_fixture_taxonomy(letters, 3, 4);

  CorpusConfig ccfg;
  ccfg.seed = derive_seed(cfg.seed, "gradcheck-corpus");
  ccfg.size = 24;
  ccfg.doc_len = cfg.model.doc_len;
  const auto corpus = generate_corpus(tax, ccfg);
  const auto vocab = Vocabulary::build(corpus);
  const auto graph = build_graph(collect_topic_stats(corpus, tax), 0.1, 0.1);

  // Prefer an interdisciplinary proposal reaching full depth so every
  // level head and both letters take part.
  const Proposal* chosen = nullptr;
  for (const auto& p : corpus) {
    const auto path = encode_topic_path(p.labels, tax);
    if (path.effective_depth() < tax.depth()) continue;
    if (!chosen || p.labels.size() > chosen->labels.size()) chosen = &p;
  }
  if (!chosen) throw Error(ErrorCode::ConfigInvalid, "no full-depth proposal in the grad-check corpus");
  const auto tp = tokenize(*chosen, vocab, cfg.model.doc_len);
  const auto truth = encode_topic_path(chosen->labels, tax);

  ModelConfig mcfg = cfg.model;
  mcfg.dropout = 0.0;
  mcfg.vocab_size = vocab.size();
  mcfg.init_seed = derive_seed(cfg.seed, "gradcheck-init");
  HirpcnModel model(mcfg, tax, graph);
  auto& params = model.params();
  const ad::DropoutCtx no_drop;

  params.zero_grad();
  {
    ad::Tape tape;
    ad::Binder bind(tape);
    tape.backward(model.forward_train(bind, tp, truth, no_drop));
  }
  auto loss_at = [&] {
    ad::Tape tape(false);
    ad::Binder bind(tape);
    return model.forward_train(bind, tp, truth, no_drop).value()[0];
  };

  // Rows of the lookup tables that this proposal can reach.
  std::set<std::size_t> word_rows;
  for (const auto& doc : tp.tokens) {
    for (auto id : doc) word_rows.insert(static_cast<std::size_t>(id));
  }
  std::set<std::size_t> node_rows = {static_cast<std::size_t>(kRootId)};
  for (int k = 1; k < truth.effective_depth(); ++k) {
    const auto& labels = truth.levels[static_cast<std::size_t>(k)].labels;
    const std::vector<DisciplineId> centrals(labels.begin(), labels.end());
    for (DisciplineId m : sample_neighborhood(graph, centrals, static_cast<int>(mcfg.n_g)).members) {
      node_rows.insert(static_cast<std::size_t>(m));
    }
  }

  const std::size_t per_tensor =
      std::max<std::size_t>(1, (cfg.samples + params.size() - 1) / params.size());
  std::mt19937_64 rng(derive_seed(cfg.seed, "gradcheck-sample"));
  GradCheckResult r;
  std::set<std::string> groups;
  for (auto& [name, p] : params) {
    std::vector<std::size_t> candidates;
    const std::set<std::size_t>* rows = name == "embedding.word" ? &word_rows
                                        : name == "ike.node"     ? &node_rows
                                                                 : nullptr;
    if (rows) {
      for (std::size_t row : *rows) {
        for (std::size_t c = 0; c < p.value.cols(); ++c) candidates.push_back(row * p.value.cols() + c);
      }
    } else {
      candidates.resize(p.value.size());
      for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
    }
    for (std::size_t s = 0; s < per_tensor && !candidates.empty(); ++s) {
      const std::size_t pick = rng() % candidates.size();
      const std::size_t idx = candidates[pick];
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
      const double orig = p.value[idx];
      p.value[idx] = orig + cfg.step;
      const double up = loss_at();
      p.value[idx] = orig - cfg.step;
      const double down = loss_at();
      p.value[idx] = orig;
      GradCheckEntry e{name, idx, p.grad[idx], (up - down) / (2.0 * cfg.step), 0.0};
      e.rel_error = relative_error(e.analytic, e.numeric, cfg.floor);
      if (r.entries.empty() || e.rel_error > r.max_rel_error) {
        r.max_rel_error = e.rel_error;
        r.worst = e;
      }
      r.entries.push_back(e);
      groups.insert(name.substr(0, name.find('.')));
    }
  }
  r.groups.assign(groups.begin(), groups.end());
  r.pass = r.max_rel_error <= cfg.tolerance && r.entries.size() >= cfg.samples;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace hirpcn
