# %% [markdown]
# # The book behind the chain
#
# A FIFO book where makers keep one contract on every level near the ask.
# A unit market buy lifts the ask by one tick; a unit sell drops it by one.

# %%
import numpy as np

from nlob import book

b = book.one_per_level_book(anchor=100, span=3)
print(b.snapshot())
print(b.submit_market(book.BUY, 1).fills)
b.maker_refill()
print("ask", b.best_ask, "bid", b.best_bid)

# %% [markdown]
# Replaying random taker signs through the book reproduces the birth-death walk.

# %%
signs = np.random.default_rng(0).choice([-1, 1], 20).tolist()
print(book.replay_ask_path(signs, 100)[:10])
print("equivalent:", book.replay_equivalence(signs, 100))

# %% [markdown]
# Ordinary limit orders cross by price then time priority.

# %%
b = book.Book()
b.submit_limit(book.Order("s1", book.SELL, 10, 2))
b.submit_limit(book.Order("s2", book.SELL, 10, 1))
b.submit_limit(book.Order("s3", book.SELL, 11, 1))
for f in b.submit_limit(book.Order("b1", book.BUY, 11, 4)):
    print(f)
