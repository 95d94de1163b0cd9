#pragma once

#include "tweetstock/csv.hpp"
#include "tweetstock/date.hpp"
#include "tweetstock/embed.hpp"
#include "tweetstock/error.hpp"
#include "tweetstock/ingest.hpp"
#include "tweetstock/matrix.hpp"
#include "tweetstock/net.hpp"
#include "tweetstock/rng.hpp"
#include "tweetstock/sentiment.hpp"
#include "tweetstock/stats.hpp"
#include "tweetstock/textprep.hpp"
#include "tweetstock/train.hpp"
