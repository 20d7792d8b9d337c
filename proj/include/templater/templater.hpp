#pragma once

#include "templater/conserved_mapping.hpp"
#include "templater/dot.hpp"
#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/lammps_io.hpp"
#include "templater/mapping.hpp"
#include "templater/pipeline.hpp"
#include "templater/reaction_analysis.hpp"
#include "templater/similarity.hpp"
#include "templater/template_builder.hpp"
#include "templater/text.hpp"
