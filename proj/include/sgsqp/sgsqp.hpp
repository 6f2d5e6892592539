#pragma once

#include "sgsqp/error.hpp"
#include "sgsqp/partition.hpp"
#include "sgsqp/block_operator.hpp"
#include "sgsqp/majorizer.hpp"
#include "sgsqp/prox.hpp"
#include "sgsqp/problem.hpp"
#include "sgsqp/cycle.hpp"
#include "sgsqp/oracle.hpp"
#include "sgsqp/scb.hpp"
#include "sgsqp/apg.hpp"
#include "sgsqp/palm.hpp"
#include "sgsqp/instance.hpp"
#include "sgsqp/trace_io.hpp"
