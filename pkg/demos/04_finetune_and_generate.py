"""Fine-tune on a toy corpus and decode conclusions
===================================================

Four source/conclusion pairs, a fresh BPE table, a small model, and a few
hundred SGD steps (lr 0.001, momentum 0.9, weight decay 0.0005). Greedy
decoding then reproduces the memorized conclusions, with and without a
forced hint word. Takes well under a minute on a laptop core.
"""

from prefixlm.bpe import train_merges
from prefixlm.data import RctExample
from prefixlm.finetune import (
    HINTLESS_PROMPT,
    OptimizerState,
    filter_long,
    prepare_example,
    training_step,
)
from prefixlm.generate import GenerationConfig, generate_greedy
from prefixlm.model import Model, ModelConfig, init_params

pairs = [
    ("Patients received alphacillin or placebo . Treatment with alphacillin"
     " significantly reduced pain scores .",
     "alphacillin improved pain control ."),
    ("Patients received betamab or placebo . Treatment with betamab"
     " significantly lowered blood pressure .",
     "betamab controlled hypertension ."),
    ("Patients received gammazole or placebo . Treatment with gammazole"
     " significantly improved sleep quality .",
     "gammazole treated insomnia ."),
    ("Patients received deltaprol or placebo . Treatment with deltaprol"
     " significantly reduced seizure frequency .",
     "deltaprol prevented seizures ."),
]

texts = [s for s, _ in pairs] + [t for _, t in pairs] + [HINTLESS_PROMPT]
tok = train_merges(texts, 120)
examples = [RctExample(str(i), s, t, ("RESULTS",)) for i, (s, t) in enumerate(pairs)]

# two layouts per example: hintless (source + "In conclusion , " + <sep>)
# and one forced hint word at the start of the target region
encoded = filter_long(
    [prepare_example(e, 0, tok) for e in examples]
    + [prepare_example(e, 1, tok) for e in examples],
    max_len=500,
)
print("encoded lengths:", [len(e) for e in encoded])

config = ModelConfig(n_layers=2, d_model=48, n_heads=4, d_ff=192,
                     vocab_size=len(tok.vocab), max_positions=128)
model = Model(config, init_params(config, seed=1))
state = OptimizerState(lr=0.001, momentum=0.9, weight_decay=0.0005)

loss = float("inf")
step = 0
while loss > 0.08 and step < 2000:
    loss = training_step(model, encoded, state)
    step += 1
    if step % 100 == 0:
        print(f"step {step:4d}  loss {loss:.4f}")
print(f"stopped at step {step} with loss {loss:.4f}")

print("\ngreedy decoding (no hints; the prompt steers the model):")
gen = GenerationConfig(n_hints=0, max_new_tokens=32)
for source, target in pairs:
    text, _ = generate_greedy(model, source, [], gen, tok)
    flag = "==" if text == target else "~>"
    print(f"  {flag} {text}")

print("\nwith one forced hint word the output must start with it:")
gen1 = GenerationConfig(n_hints=1, max_new_tokens=32)
source, target = pairs[2]
hint = target.split()[0]
text, trace = generate_greedy(model, source, [hint], gen1, tok)
print(f"  hint {hint!r} -> {text}")
print(f"  trace begins with the hint tokens: {trace[:len(tok.encode(hint))]}")
