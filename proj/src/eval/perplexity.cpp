// Copyright 2026 The FAMA-desk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fama/eval/perplexity.hpp"

#include <algorithm>
#include <cmath>

#include "fama/numcore/autograd.hpp"

namespace fama::eval {

PerplexityResult perplexity(model::FamaModel& model, const train::Dataset& data, Task task,
                            const text::Vocabulary& vocab, std::size_t batch_size) {
  if (data.empty()) throw ValueError("perplexity: empty dataset");
  if (batch_size == 0) throw ValueError("perplexity: batch size must be positive");
  if (task == Task::kSt) {
    for (const auto& u : data.utts) {
      if (!u.entry.translation) throw ValueError("perplexity: utterance '" + u.id + "' has no translation");
    }
  }
  num::NoGradGuard no_grad;
  const bool was_training = model.training();
  model.set_training(false);
  PerplexityResult r;
  const std::size_t V = vocab.size();
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = start + i;
    const std::vector<Task> tasks(n, task);
    const auto b = train::collate(data, idx, tasks, vocab);
    const auto enc = model.encode(b.features, b.lengths);
    const auto lp = model.decode(model.memory(enc), b.targets.decoder_inputs, b.targets.dec_len);
    const auto d = lp.data();
    const auto& tgt = b.targets.decoder_targets;
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      if (tgt[i] == text::Vocabulary::kPad) continue;
      r.nll -= d[i * V + static_cast<std::size_t>(tgt[i])];
      ++r.tokens;
    }
  }
  model.set_training(was_training);
  r.ppl = std::exp(r.nll / static_cast<double>(r.tokens));
  return r;
}

}  // namespace fama::eval
