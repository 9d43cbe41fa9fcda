#pragma once

#include "corpus.hpp"
#include "docset.hpp"
#include "eval.hpp"
#include "index.hpp"
#include "induct.hpp"
#include "project.hpp"
#include "query.hpp"
#include "ruleset.hpp"
#include "stats.hpp"
#include "tokenize.hpp"
