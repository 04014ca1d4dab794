#include <stdio.h>
#include <string.h>
#include "autoseq.h"

int main(void) {
    AutoseqDfa *dfa = NULL;
    if (autoseq_dfa_builtin("mod:4:2", &dfa) != AUTOSEQ_STATUS_OK) return 10;
    uint64_t counts[4];
    if (autoseq_letter_counts(dfa, 3, 2, 1000, 1, counts, 4) != AUTOSEQ_STATUS_OK) return 11;
    uint64_t total = counts[0] + counts[1] + counts[2] + counts[3];
    if (total != 1000) return 12;
    uint64_t v = 0;
    if (autoseq_ps_floor(10, 3, 2, &v) != AUTOSEQ_STATUS_OK || v != 31) return 13;
    AutoseqDfa *bad = NULL;
    if (autoseq_dfa_builtin("nope", &bad) == AUTOSEQ_STATUS_OK) return 14;
    if (strlen(autoseq_last_error()) == 0) return 15;
    autoseq_dfa_free(dfa);
    printf("ok %s\n", autoseq_version());
    return 0;
}
